import argparse
import json
import sys
from pathlib import Path

from campaign import config_for_replay, config_from_dict, run_campaign
from checks import get_check, listed_checks
from commuting_means import log_mean
from errors import ConfigError, NonConvergence, VerificationError
from linalg_core import HermitianMatrix, decomposition_check, eig_hermitian
from matrix_io import read_matrix_file
from models import CampaignConfig, VerdictStatus
from random_instances import trial_rng
from trace_ineq import TraceCheckInstance

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _name_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="Numerically verify Hermite-Hadamard, operator and trace inequalities"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="Evaluate one check and print its verdict as JSON")
    check.add_argument("check_id", help=f"One of: {', '.join(listed_checks())}")
    check.add_argument("--file", help="Operands JSON ({'operands': ..., 'params': ...})")
    check.add_argument("--replay", help="Witness file written by a campaign")
    check.add_argument("--alpha", type=float, help="Exponent for the Dragomir checks")
    check.add_argument("--r", type=float, help="Schatten exponent for bhatia_davis")
    check.add_argument("--nu", type=float, help="Weight for the AGM checks")
    check.add_argument("--seed", type=int, default=0, help="Seed for a random instance")
    check.add_argument("--dim", type=int, default=4, help="Dimension of a random instance")

    campaign = sub.add_parser("campaign", help="Run a seeded campaign over many checks")
    campaign.add_argument("--config", help="Path to a campaign config JSON")
    campaign.add_argument("--seed", type=int)
    campaign.add_argument("--dims", type=_int_list, help="Comma separated, e.g. 2,4,8")
    campaign.add_argument("--trials", type=int, help="Trials per check, spread over the dims")
    campaign.add_argument("--checks", type=_name_list, help="Comma separated check ids")
    campaign.add_argument("--workers", type=int)
    campaign.add_argument("--output", help="Directory for the log file and witnesses")
    campaign.add_argument("--out", help="Report JSON path")
    campaign.add_argument("--csv", help="Per-trial CSV path")
    campaign.add_argument("--xlsx", help="Workbook path")
    campaign.add_argument("--chains", help="Directory for one link-value CSV per chain check")

    oracle = sub.add_parser("oracle", help="Closed-form and diagnostic values")
    which = oracle.add_subparsers(dest="oracle", required=True)
    lm = which.add_parser("logmean", help="Logarithmic mean L(a, b)")
    lm.add_argument("--a", type=float, required=True)
    lm.add_argument("--b", type=float, required=True)
    eig = which.add_parser("eig", help="Jacobi eigendecomposition of a Hermitian matrix")
    eig.add_argument("--file", required=True, help="Matrix JSON ({'n', 're', 'im'})")

    return parser.parse_args(argv)


def _emit(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _load_instance(args: argparse.Namespace) -> tuple[TraceCheckInstance, CampaignConfig]:
    config = CampaignConfig()
    if args.replay:
        dossier = json.loads(Path(args.replay).read_text(encoding="utf-8"))
        instance = TraceCheckInstance.from_json(dossier.get("instance", dossier))
        config = config_for_replay(dossier, config)
        if instance.check != args.check_id:
            raise ConfigError(f"witness is for '{instance.check}', not '{args.check_id}'")
    elif args.file:
        data = json.loads(Path(args.file).read_text(encoding="utf-8"))
        data = {"operands": data.get("operands", {}), "params": data.get("params", {}), "check": args.check_id}
        instance = TraceCheckInstance.from_json(data)
    else:
        rng = trial_rng(args.seed, args.check_id, 0)
        instance = get_check(args.check_id).build(rng, args.dim, config)
    for name in ("alpha", "r", "nu"):
        value = getattr(args, name)
        if value is not None:
            instance.params[name] = value
    return instance, config


def run_check(args: argparse.Namespace) -> int:
    definition = get_check(args.check_id)
    instance, config = _load_instance(args)
    verdict = definition.evaluate(instance, config)
    _emit({"check": instance.check, "params": instance.params, "verdict": verdict.to_dict()})
    return EXIT_VIOLATED if verdict.status == VerdictStatus.VIOLATED else EXIT_OK


def run_campaign_command(args: argparse.Namespace) -> int:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as ex:
            raise ConfigError(f"cannot read config file '{args.config}': {ex}") from ex
    overrides = {
        "seed": args.seed,
        "dims": args.dims,
        "trialsPerCheck": args.trials,
        "checks": args.checks,
        "workers": args.workers,
        "outputPath": args.output,
    }
    data.update({key: value for key, value in overrides.items() if value is not None})
    config = config_from_dict(data)
    report = run_campaign(config, report_path=args.out, csv_path=args.csv, xlsx_path=args.xlsx,
                          chains_path=args.chains)
    return report.exit_code


def run_oracle(args: argparse.Namespace) -> int:
    if args.oracle == "logmean":
        _emit({"a": args.a, "b": args.b, "log_mean": log_mean(args.a, args.b)})
        return EXIT_OK
    h = HermitianMatrix.strict(read_matrix_file(args.file))
    d = eig_hermitian(h)
    check = decomposition_check(h)
    _emit(
        {
            "eigenvalues": [float(x) for x in d.lam],
            "residual": check.details["residual"],
            "orthogonality": check.details["orthogonality"],
            "verdict": check.status.value,
        }
    )
    return EXIT_OK


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        if args.command == "check":
            return run_check(args)
        if args.command == "campaign":
            return run_campaign_command(args)
        return run_oracle(args)
    except NonConvergence as ex:
        print(f"ERROR: {ex}", file=sys.stderr)
        return EXIT_NUMERICAL
    except KeyError as ex:
        print(f"ERROR: missing field {ex}", file=sys.stderr)
        return EXIT_USAGE
    except (VerificationError, ValueError, OSError) as ex:
        print(f"ERROR: {ex}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
