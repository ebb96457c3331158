"""
Turns a SessionReport into the plain text summary printed at the end of a run.

The machine readable summary record is SessionReport.to_dict(); this module
only renders it for people.
"""
from string import Template

TEMPLATE = """\
mdiqkd session report
=====================
protocol:             $protocol
field:                GF($N)
channel:              $channel
charlie:              $charlie
seed:                 $seed

rounds:               $rounds_total ($rounds_lost lost)
sifted rounds:        $rounds_sifted ($sifting_rate)
projection success:   $projection_success_rate
sifted bits:          $sifted_bits
raw QBER:             $raw_qber
${expected}QBER estimate:        $qber_estimate (sample of $qber_sample_size bits)
EC leakage:           $ec_leakage_bits bits
final key length:     $final_key_length bits$heuristic
keys agree:           $key_agreement
$attack"""

ATTACK_TEMPLATE = """\
attacker knowledge:   $attacker_knowledge
QBER delta:           $qber_delta
"""

HEURISTIC_NOTE = " (heuristic, not a proven secure rate)"


def format_rate(value, digits=4):
    """
    A rate as a fixed point number, or "n/a" when it was not measured.
    """
    if value is None:
        return "n/a"
    return "%.*f" % (digits, value)


def format_signed(value, digits=4):
    """
    Returns a difference with an explicit sign, or "n/a".
    """
    if value is None:
        return "n/a"
    return "%+.*f" % (digits, value)


def describe_channel(channel):
    """
    Returns the channel kind, with p and the noisy legs when it acts at all.
    """
    if channel.noisy_legs:
        return "%s p=%g on %s" % (
            channel.kind.value,
            channel.p,
            ", ".join(channel.legs),
        )
    return channel.kind.value


def format_expected(report):
    """
    Returns the lines giving the analytic rates for a depolarizing channel,
    or an empty string when the report carries none.
    """
    lines = ""
    if report.expected_qber is not None:
        lines += "expected QBER:        %s\n" % format_rate(report.expected_qber)
    if report.expected_disagreement_rate is not None:
        lines += "expected mismatch:    %s\n" % format_rate(
            report.expected_disagreement_rate
        )
    return lines


def render(report, config):
    """
    Given a SessionReport and the RunConfig that produced it returns the
    text report. The key length is always marked as a heuristic.
    """
    context = {}
    context["protocol"] = config.protocol.value
    context["N"] = config.spec.N
    context["channel"] = describe_channel(config.channel)
    context["charlie"] = config.charlie.kind.value
    context["seed"] = config.seed
    context["rounds_total"] = report.rounds_total
    context["rounds_lost"] = report.rounds_lost
    context["rounds_sifted"] = report.rounds_sifted
    context["sifting_rate"] = format_rate(report.sifting_rate)
    context["projection_success_rate"] = format_rate(report.projection_success_rate)
    context["sifted_bits"] = report.sifted_bits
    context["raw_qber"] = format_rate(report.raw_qber)
    context["expected"] = format_expected(report)
    context["qber_estimate"] = format_rate(report.qber_estimate)
    context["qber_sample_size"] = report.qber_sample_size
    context["ec_leakage_bits"] = report.ec_leakage_bits
    context["final_key_length"] = report.final_key_length
    context["heuristic"] = HEURISTIC_NOTE if report.key_length_heuristic else ""
    context["key_agreement"] = "yes" if report.key_agreement else "no"
    context["attack"] = ""
    if config.charlie.attacking:
        context["attack"] = Template(ATTACK_TEMPLATE).substitute(
            attacker_knowledge=format_rate(report.attacker_knowledge),
            qber_delta=format_signed(report.qber_delta),
        )
    return Template(TEMPLATE).substitute(context)
