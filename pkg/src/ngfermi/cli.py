"""Command-line entry point: model generation, optimization runs, validation,
circuit export.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 stagnation.  All run behaviour is controlled by a strict JSON config
(unknown keys are rejected); every floating-point output is serialized with
17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import circuit, gaussian, optimizer, validate
from . import hamiltonian as ham
from .errors import (
    ConfigError,
    FormatError,
    NgfError,
    NumericsError,
    SingularContractionError,
    StagnationError,
    ValidationError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_STAGNATION = 4


# ---------------------------------------------------------------- checkpoints

def save_checkpoint(path, state: optimizer.OptimizerState) -> None:
    """JSON checkpoint: mode count, row-major gamma and omega, tau, energy."""
    n = state.gamma.n_modes
    payload = {
        "n_modes": n,
        "gamma": [float(x) for x in state.gamma.gamma.ravel()],
        "omega": [float(x) for x in state.omega.omega.ravel()],
        "tau": state.tau,
        "energy": state.energy,
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_checkpoint(path) -> tuple[gaussian.CovarianceMatrix, ham.NonGaussianParams, float, float]:
    with open(path, "r", encoding="ascii") as fh:
        payload = json.load(fh)
    required = {"n_modes", "gamma", "omega", "tau", "energy"}
    if set(payload) != required:
        raise FormatError(
            f"checkpoint keys {sorted(payload)} do not match {sorted(required)}"
        )
    n = int(payload["n_modes"])
    try:
        gamma = np.asarray(payload["gamma"], dtype=float).reshape(2 * n, 2 * n)
        omega = np.asarray(payload["omega"], dtype=float).reshape(n, n)
        return (
            gaussian.CovarianceMatrix(gamma),
            ham.NonGaussianParams(omega),
            float(payload["tau"]),
            float(payload["energy"]),
        )
    except (ValidationError, ValueError) as exc:
        raise FormatError(f"checkpoint data invalid: {exc}") from exc


# ------------------------------------------------------------- configuration

_TOP_KEYS = {
    "hamiltonian",
    "init",
    "filling",
    "omega_update",
    "freeze_omega",
    "dtau0",
    "dtau_max",
    "dtau_min",
    "tol_g",
    "tol_e",
    "patience",
    "max_steps",
    "threads",
    "outputs",
}


def _reject_unknown(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def parse_config(payload: dict) -> dict:
    """Validate the run config; returns a dict of resolved pieces."""
    if not isinstance(payload, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(payload, _TOP_KEYS, "config")
    if "hamiltonian" not in payload:
        raise ConfigError("config needs a 'hamiltonian' section")

    hsec = payload["hamiltonian"]
    if not isinstance(hsec, dict):
        raise ConfigError("'hamiltonian' must be an object")
    try:
        if "path" in hsec:
            _reject_unknown(hsec, {"path"}, "hamiltonian")
            hamil = ham.load_hamiltonian(hsec["path"])
        elif hsec.get("model") == "hubbard":
            _reject_unknown(hsec, {"model", "sites", "t", "u", "mu", "periodic"}, "hamiltonian")
            hamil = ham.hubbard_model(
                int(hsec["sites"]),
                float(hsec.get("t", 1.0)),
                float(hsec.get("u", 0.0)),
                float(hsec.get("mu", 0.0)),
                bool(hsec.get("periodic", False)),
            )
        else:
            raise ConfigError("'hamiltonian' needs either 'path' or model: 'hubbard'")
    except (ValidationError, FormatError) as exc:
        # malformed input data is a configuration problem, not a numerical one
        raise ConfigError(str(exc)) from exc

    init = payload.get("init", "meanfield")
    if isinstance(init, dict):
        _reject_unknown(init, {"random_seed", "checkpoint"}, "init")
        if len(init) != 1:
            raise ConfigError("'init' object needs exactly one of random_seed/checkpoint")
    elif init != "meanfield":
        raise ConfigError(f"unknown init {init!r}")

    update = payload.get("omega_update", "hitgd")
    simple_c = None
    if isinstance(update, dict):
        _reject_unknown(update, {"simple"}, "omega_update")
        simple = update["simple"]
        _reject_unknown(simple, {"c"}, "omega_update.simple")
        simple_c = float(simple["c"])
        update_name = "simple"
    elif update in ("hitgd", "simple"):
        update_name = update
        if update == "simple":
            raise ConfigError("omega_update 'simple' needs {'simple': {'c': ...}}")
    else:
        raise ConfigError(f"unknown omega_update {update!r}")

    outputs = payload.get("outputs", {})
    _reject_unknown(outputs, {"checkpoint", "trajectory"}, "outputs")

    threads = int(payload.get("threads", 1))
    if threads < 1:
        raise ConfigError("threads must be >= 1")

    for key in ("tol_g", "tol_e", "dtau0", "dtau_max", "dtau_min"):
        if key in payload and not (float(payload[key]) > 0.0):
            raise ConfigError(f"{key} must be positive")
    try:
        options = optimizer.RunOptions(
            omega_update=update_name,
            simple_c=simple_c,
            freeze_omega=bool(payload.get("freeze_omega", False)),
            dtau0=float(payload.get("dtau0", 0.1)),
            dtau_max=float(payload.get("dtau_max", 1.0)),
            dtau_min=float(payload.get("dtau_min", 1e-8)),
            tol_g=float(payload.get("tol_g", 1e-7)),
            tol_e=float(payload.get("tol_e", 1e-11)),
            patience=int(payload.get("patience", 10)),
            max_steps=int(payload.get("max_steps", 5000)),
        )
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc

    filling = float(payload.get("filling", 0.5))
    if not (0.0 <= filling <= 1.0):
        raise ConfigError("filling must lie in [0, 1]")

    return {
        "hamiltonian": hamil,
        "init": init,
        "options": options,
        "outputs": outputs,
        "filling": filling,
        "threads": threads,
    }


def _build_initial_state(resolved: dict) -> optimizer.OptimizerState:
    hamil = resolved["hamiltonian"]
    options = resolved["options"]
    init = resolved["init"]
    if init == "meanfield":
        return optimizer.initial_state(hamil, options, filling=resolved["filling"])
    if "random_seed" in init:
        return optimizer.initial_state(hamil, options, seed=int(init["random_seed"]))
    gamma, omega, tau, _ = load_checkpoint(init["checkpoint"])
    energy = ham.energy(gamma, omega, hamil)[2]
    return optimizer.OptimizerState(
        gamma=gamma, omega=omega, tau=tau, energy=energy, step_size=options.dtau0
    )


# ------------------------------------------------------------------ commands

def cmd_model(args) -> int:
    if args.model != "hubbard":
        raise ConfigError(f"unknown model {args.model!r}")
    if args.sites < 2:
        raise ConfigError(f"hubbard model needs at least 2 sites, got {args.sites}")
    hamil = ham.hubbard_model(args.sites, args.t, args.u, args.mu, args.periodic)
    ham.save_hamiltonian(hamil, args.out)
    print(f"wrote {args.out}: hubbard sites={args.sites} modes={hamil.n_modes}")
    return EXIT_OK


def cmd_run(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    resolved = parse_config(payload)
    state = _build_initial_state(resolved)
    final, records, reason = optimizer.run(resolved["hamiltonian"], resolved["options"], state)
    outputs = resolved["outputs"]
    if "trajectory" in outputs:
        with open(outputs["trajectory"], "w", encoding="ascii") as fh:
            for record in records:
                fh.write(json.dumps(record.as_dict()) + "\n")
    if "checkpoint" in outputs:
        save_checkpoint(outputs["checkpoint"], final)
    print(
        f"stopped: {reason} after {len(records) - 1} steps, "
        f"tau={final.tau:.17g}, energy={final.energy:.17g}"
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    results = validate.run_all(n_modes=args.n_modes, seed=args.seed)
    width = max(len(r.name) for r in results)
    failed = False
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(
            f"{status}  {result.name:<{width}}  max deviation {result.deviation:.3e}"
            f"  (tolerance {result.tolerance:.0e})"
        )
        failed = failed or not result.passed
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_circuit(args) -> int:
    _, omega, _, _ = load_checkpoint(args.checkpoint)
    gates = circuit.emit_ufa(omega)
    qasm = circuit.to_qasm(gates, native_rzz=args.native_rzz)
    with open(args.out_qasm, "w", encoding="ascii") as fh:
        fh.write(qasm)
    report = circuit.resource_report(gates, args.connectivity)
    if gates.n_qubits <= 10:
        report["dense_deviation"] = circuit.verify_dense(gates, omega)
        if report["dense_deviation"] >= 1e-10:
            raise NumericsError(
                f"emitted circuit deviates from the exact unitary by "
                f"{report['dense_deviation']:.3e}"
            )
    with open(args.out_report, "w", encoding="ascii") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    counts = gates.counts()
    print(
        f"wrote {args.out_qasm} ({counts['rz']} rz, {counts['zz']} zz) "
        f"and {args.out_report}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ngfermi",
        description="Variational fermionic ground states with flux-attached Gaussian Ansatz",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_model = sub.add_parser("model", help="generate a Hamiltonian file")
    p_model.add_argument("model", choices=["hubbard"])
    p_model.add_argument("--sites", type=int, required=True)
    p_model.add_argument("--t", type=float, default=1.0)
    p_model.add_argument("--u", type=float, default=0.0)
    p_model.add_argument("--mu", type=float, default=0.0)
    p_model.add_argument("--periodic", action="store_true")
    p_model.add_argument("--out", required=True)
    p_model.set_defaults(func=cmd_model)

    p_run = sub.add_parser("run", help="optimize from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="run the dense-oracle cross-check suite")
    p_val.add_argument("--n-modes", type=int, default=4)
    p_val.add_argument("--seed", type=int, default=2024)
    p_val.set_defaults(func=cmd_validate)

    p_circ = sub.add_parser("circuit", help="export the coupling circuit from a checkpoint")
    p_circ.add_argument("--checkpoint", required=True)
    p_circ.add_argument("--out-qasm", required=True)
    p_circ.add_argument("--out-report", required=True)
    p_circ.add_argument("--connectivity", choices=["all_to_all", "linear"], default="all_to_all")
    p_circ.add_argument("--native-rzz", action="store_true")
    p_circ.set_defaults(func=cmd_circuit)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FormatError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StagnationError as exc:
        print(f"stagnation: {exc}", file=sys.stderr)
        return EXIT_STAGNATION
    except (NumericsError, SingularContractionError, ValidationError, NgfError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
