"""Command-line entry point.

Commands: ``verify``, ``optimize``, ``render``, ``count``, ``gradcheck``.
Exit codes: 0 success, 1 contract or convergence failure, 2 usage, parse or
configuration error. Reports are ``key=value`` lines grouped by blank lines.

Run configurations (``optimize``, ``gradcheck``) are JSON files::

    {
      "objective": {"code": "three_bitflip", "contract": "syndrome",
                    "outcome_map": {"I": "11", "X1": "10", "X2": "01", "X3": "00"}},
      "optimizer": {"initial_length": 60, "ms_count": 4, "segments": 2, "n_code": 3},
      "out": "best.seq",
      "trace": "trace.txt"
    }
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import codes
from .corpus import Contract, verify_fixture
from .gateset import Kind, Pulse, PulseSequence
from .layout import reroll
from .objective import EvalContext, finite_difference_gradient, gradient
from .optimizer import ConfigInvalidError, OptimizerConfig, optimize
from .render import render
from .seqfile import ParseError, format_angle, format_sequence, read_sequence
from .verifier import ResetOnEntangledQubitError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

CONTRACTS = ("syndrome", "stabilizer", "coherent", "state_prep", "logical_gate")
OBJECTIVE_CONTRACTS = CONTRACTS + ("fixed_unitary",)


class ContractMismatchError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument resolution


def _code(name: str | None) -> codes.CodeSpec:
    if not name:
        raise ContractMismatchError("--code is required for this contract")
    return codes.builtin_code(name)


def load_matrix(spec) -> np.ndarray:
    """Gate from a name in ``NAMED_GATES``, a nested list, or a text file of complex entries."""
    if isinstance(spec, str) and spec in codes.NAMED_GATES:
        return codes.NAMED_GATES[spec]
    if isinstance(spec, str):
        path = Path(spec)
        if not path.exists():
            raise ContractMismatchError(f"unknown gate {spec!r}")
        return np.atleast_2d(np.loadtxt(path, dtype=complex))
    return np.array(spec, dtype=complex)


def load_state(spec, code: codes.CodeSpec | None = None) -> np.ndarray:
    """Target state: ``0``/``1``/``+``/``-`` (logical, needs a code), a list, or a text file."""
    if isinstance(spec, str) and spec in ("0", "1", "+", "-"):
        if code is None:
            raise ContractMismatchError("logical target names need --code")
        amps = {"0": (1, 0), "1": (0, 1), "+": (1, 1), "-": (1, -1)}[spec]
        return code.logical(*amps) / np.linalg.norm(amps)
    if isinstance(spec, str):
        vec = np.loadtxt(Path(spec), dtype=complex).ravel()
    else:
        vec = np.array(spec, dtype=complex).ravel()
    return vec / np.linalg.norm(vec)


def _stabilizer_indices(values) -> list[int]:
    out: list[int] = []
    for v in values or []:
        out += [int(x) for x in str(v).split(",") if x.strip()]
    return out


def build_contract(contract: str | None, code_name: str | None, stabilizers=None, gate=None, target=None) -> Contract:
    kind = contract or ("stabilizer" if stabilizers else "logical_gate" if gate is not None else "state_prep" if target is not None else "syndrome")
    if kind not in CONTRACTS:
        raise ContractMismatchError(f"unknown contract {kind!r}; choose from {', '.join(CONTRACTS)}")
    if kind == "state_prep":
        if target is None:
            raise ContractMismatchError("state_prep needs --target")
        code = codes.builtin_code(code_name) if code_name else None
        return Contract(kind, code_name or "", target=load_state(target, code))
    code = _code(code_name)
    if kind == "stabilizer":
        idx = _stabilizer_indices(stabilizers)
        n_stab = len(code.stabilizers)
        if not idx or any(not 1 <= i <= n_stab for i in idx):
            raise ContractMismatchError(f"--stabilizer needs indices in 1..{n_stab}")
        return Contract(kind, code.name, stabilizers=idx)
    if kind == "logical_gate":
        if gate is None:
            raise ContractMismatchError("logical_gate needs --gate")
        g = load_matrix(gate)
        if g.shape != (2, 2):
            raise ContractMismatchError(f"gate must be 2x2, got {g.shape}")
        return Contract(kind, code.name, gate=g)
    return Contract(kind, code.name)


def check_dimensions(seq: PulseSequence, c: Contract) -> None:
    if c.kind == "state_prep":
        if c.target.shape[0] != 2**seq.n_qubits:
            raise ContractMismatchError(f"target has dimension {c.target.shape[0]}, sequence acts on {seq.n_qubits} qubits")
        return
    n_code = codes.builtin_code(c.code).n_code_qubits
    if c.kind == "logical_gate":
        if seq.n_qubits != n_code:
            raise ContractMismatchError(f"{c.code} has {n_code} qubits, sequence has {seq.n_qubits}")
    elif seq.n_qubits <= n_code:
        raise ContractMismatchError(f"{c.kind} needs auxiliary qubits beyond the {n_code} code qubits; sequence has {seq.n_qubits}")


# ---------------------------------------------------------------------------
# commands


def cmd_verify(args) -> int:
    seq = read_sequence(args.sequence)
    c = build_contract(args.contract, args.code, args.stabilizer, args.gate, args.target)
    check_dimensions(seq, c)
    try:
        report = verify_fixture(seq, c, tol=args.tol)
    except ResetOnEntangledQubitError as exc:
        sys.stdout.write(f"contract={c.kind}\npass=false\nmessage={exc}\n")
        return EXIT_FAIL
    lines = [f"{k}={v}" for k, v in sorted(report.outcome_map.items())]
    out = report.records()
    if lines:
        out += "\n" + "\n".join(f"map.{x}" for x in lines) + "\n"
    sys.stdout.write(out)
    return EXIT_OK if report.passed else EXIT_FAIL


def build_objective(spec: dict, cfg: OptimizerConfig) -> tuple[codes.Objective, Contract | None]:
    """Objective and the verification contract for a run configuration."""
    spec = dict(spec)
    kind = spec.pop("contract", "syndrome")
    if kind not in OBJECTIVE_CONTRACTS:
        raise ConfigInvalidError(f"unknown contract {kind!r}")
    code = codes.builtin_code(spec["code"]) if spec.get("code") else None
    if kind == "fixed_unitary":
        return codes.fixed_unitary_objective(load_matrix(spec["target"]), spec.get("mode", "abs")), None
    if kind == "state_prep":
        target = load_state(spec["target"], code)
        n = int(round(math.log2(target.shape[0])))
        init = load_state(spec["init"], code) if "init" in spec else np.zeros(2**n, dtype=complex)
        if "init" not in spec:
            init[-1] = 1.0  # |1...1>
        return codes.state_prep_objective(target, init), Contract("state_prep", spec.get("code", ""), target=target)
    if code is None:
        raise ConfigInvalidError(f"contract {kind} needs 'code'")
    n_aux = cfg.segments if cfg.segments > 1 else spec.get("n_aux")
    if kind == "syndrome":
        obj = codes.syndrome_objective(code, spec.get("outcome_map"), n_aux=n_aux)
        return obj, Contract("syndrome", code.name)
    if kind == "stabilizer":
        idx = [int(i) for i in spec["stabilizers"]]
        obj = codes.stabilizer_objective(code, idx, spec.get("representatives", "minimal"))
        return obj, Contract("stabilizer", code.name, stabilizers=idx)
    if kind == "coherent":
        return codes.coherent_objective(code, n_aux=n_aux), Contract("coherent", code.name)
    gate = load_matrix(spec["gate"])
    return codes.logical_gate_objective(code, gate), Contract("logical_gate", code.name, gate=gate)


def physical_sequence(seq: PulseSequence, contract: Contract | None, cfg: OptimizerConfig) -> PulseSequence:
    """Turn an optimized unitary sequence into one its contract can verify."""
    if contract is None or contract.kind not in ("syndrome", "stabilizer", "coherent"):
        return seq
    n_code = codes.builtin_code(contract.code).n_code_qubits
    coherent = contract.kind == "coherent"
    if cfg.segments > 1:
        return reroll(seq, n_code, coherent=coherent, final=not coherent)
    if coherent:
        return seq
    return PulseSequence(seq.n_qubits, list(seq) + [Pulse(Kind.MEASURE, None, (q,)) for q in range(n_code + 1, seq.n_qubits + 1)])


def _load_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigInvalidError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigInvalidError("configuration must be a JSON object")
    unknown = set(data) - {"objective", "optimizer", "out", "trace", "tol"}
    if unknown:
        raise ConfigInvalidError(f"unknown configuration keys: {sorted(unknown)}")
    return data


def cmd_optimize(args) -> int:
    data = _load_config(args.config)
    opt = dict(data.get("optimizer", {}))
    if args.seed is not None:
        opt["seed"] = args.seed
    cfg = OptimizerConfig.from_dict(opt)
    if "objective" not in data:
        raise ConfigInvalidError("configuration needs an 'objective' section")
    obj, contract = build_objective(data["objective"], cfg)
    report = optimize(cfg, obj)
    best = physical_sequence(report.best_sequence, contract, cfg)
    out = args.out or data.get("out")
    if out:
        Path(out).write_text(format_sequence(best))
    if data.get("trace"):
        Path(data["trace"]).write_text("".join(t.line() + "\n" for t in report.trace))
    text = report.records()
    if report.converged and contract is not None:
        check = verify_fixture(best, contract, tol=float(data.get("tol", args.tol)))
        text += f"verified={'true' if check.passed else 'false'}\n"
    sys.stdout.write(text)
    if out is None:
        sys.stdout.write("\n" + format_sequence(best))
    return EXIT_OK if report.converged else EXIT_FAIL


def cmd_render(args) -> int:
    sys.stdout.write(render(read_sequence(args.sequence)))
    return EXIT_OK


def count_report(seq: PulseSequence) -> dict[str, str]:
    ms_sum = sum(abs(p.theta) for p in seq if p.kind.is_ms)
    return {
        "unitaries": str(seq.unitary_count),
        "ms": str(seq.ms_count),
        "ms_angle_sum": format_angle(ms_sum),
        "ms_angle_sum_rad": repr(float(ms_sum)),
        "measurements": str(sum(p.kind is Kind.MEASURE for p in seq)),
        "resets": str(sum(p.kind is Kind.RESET for p in seq)),
    }


def cmd_count(args) -> int:
    sys.stdout.write("".join(f"{k}={v}\n" for k, v in count_report(read_sequence(args.sequence)).items()))
    return EXIT_OK


GRADCHECK_DEFAULTS = {"n_qubits": 3, "length": 8, "trials": 20, "seed": 1, "kinds": ["X", "Y", "z", "X2", "Y2"], "step": 1e-5}


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_sequence(n: int, length: int, kinds, rng: np.random.Generator) -> PulseSequence:
    pulses = []
    for _ in range(length):
        kind = Kind(kinds[int(rng.integers(len(kinds)))])
        theta = float(rng.uniform(-math.pi, math.pi))
        qubits = (int(rng.integers(1, n + 1)),) if kind is Kind.Z else ()
        pulses.append(Pulse(kind, theta, qubits))
    return PulseSequence(n, pulses)


def gradient_relative_error(obj: codes.Objective, seq: PulseSequence, step: float = 1e-5) -> float:
    """Max deviation from central differences, relative to the gradient scale (floor 1e-3)."""
    if not len(seq):
        return 0.0
    g = gradient(EvalContext(obj, seq))
    fd = finite_difference_gradient(obj, seq, step)
    return float(np.max(np.abs(g - fd)) / max(np.max(np.abs(fd)), 1e-3))


def cmd_gradcheck(args) -> int:
    params = dict(GRADCHECK_DEFAULTS)
    if args.config:
        data = json.loads(Path(args.config).read_text())
        unknown = set(data) - set(params)
        if unknown:
            raise ConfigInvalidError(f"unknown gradcheck keys: {sorted(unknown)}")
        params.update(data)
    if args.seed is not None:
        params["seed"] = args.seed
    n, length, trials = int(params["n_qubits"]), int(params["length"]), int(params["trials"])
    if not 1 <= n <= 8 or length < 0 or trials < 0:
        raise ConfigInvalidError("gradcheck needs 1 <= n_qubits <= 8, length >= 0, trials >= 0")
    if set(params["kinds"]) - {"X", "Y", "z", "X2", "Y2"}:
        raise ConfigInvalidError(f"unsupported kinds {params['kinds']}")
    rng = np.random.default_rng(int(params["seed"]))
    worst = 0.0
    for t in range(trials):
        obj = codes.fixed_unitary_objective(random_unitary(2**n, rng), "abs" if t % 2 == 0 else "re")
        seq = random_sequence(n, length, params["kinds"], rng)
        worst = max(worst, gradient_relative_error(obj, seq, float(params["step"])))
    ok = worst < 1e-6
    sys.stdout.write(f"trials={trials}\nmax_relative_error={worst:.3e}\npass={'true' if ok else 'false'}\n")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qecopt", description="Pulse-sequence design and verification for small QEC codes.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="check a sequence file against a QEC contract")
    v.add_argument("sequence")
    v.add_argument("--code", choices=codes.CODE_NAMES)
    v.add_argument("--contract", choices=CONTRACTS)
    v.add_argument("--stabilizer", action="append", help="stabilizer index (1-based); repeat or comma-separate")
    v.add_argument("--gate", help="gate name or matrix file")
    v.add_argument("--target", help="0, 1, +, - (logical) or a state file")
    v.add_argument("--tol", type=float, default=1e-9)
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("optimize", help="run the optimizer from a JSON run configuration")
    o.add_argument("config")
    o.add_argument("--seed", type=int)
    o.add_argument("--out")
    o.add_argument("--tol", type=float, default=1e-9)
    o.set_defaults(func=cmd_optimize)

    r = sub.add_parser("render", help="ASCII diagram of a sequence file")
    r.add_argument("sequence")
    r.set_defaults(func=cmd_render)

    c = sub.add_parser("count", help="unitary, MS, measurement and reset counts")
    c.add_argument("sequence")
    c.set_defaults(func=cmd_count)

    g = sub.add_parser("gradcheck", help="analytic gradient against finite differences")
    g.add_argument("config", nargs="?")
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ConfigInvalidError, ContractMismatchError, codes.UnknownCodeError, OSError, KeyError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
