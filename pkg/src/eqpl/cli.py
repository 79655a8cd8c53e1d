"""The `eqpl` command-line tool.

Commands: parse, expand, check, eval, prove, dnf, solve, validate-model.
Exit codes: 0 for affirmative verdicts (parsed / satisfied / proof ok /
model found / valid), 1 for negative verdicts, 2 for usage or input errors.

With --json the report is printed as a single JSON object with stable field
order (command, verdict, diagnostics, seed, timing); the timing field is
excluded from the determinism guarantee.
"""

from __future__ import annotations

import argparse
import json
import shlex
import subprocess
import sys
import time

from . import arithmetic, calculus, model_io, modelfinder, semantics
from .errors import EqplError
from .syntax import expand, parse, parse_formula_file, render
from .syntax.expand import fold_qconj
from .syntax import nodes as n


class CommandError(EqplError):
    pass


def _read_formula(args, aliases: dict[str, int], category: str = "quantum"):
    """One formula from --formula or --file; file lines are conjoined."""
    if getattr(args, "formula", None) and getattr(args, "file", None):
        raise CommandError("give either --formula or --file, not both")
    if getattr(args, "formula", None):
        return parse(args.formula, category, aliases), aliases
    if getattr(args, "file", None):
        with open(args.file, encoding="utf-8") as handle:
            file_aliases, lines = parse_formula_file(handle.read())
        merged = dict(file_aliases)
        for name, idx in aliases.items():
            if merged.setdefault(name, idx) != idx:
                raise CommandError(f"alias {name!r} conflicts with the model frame")
        if not lines:
            raise CommandError(f"{args.file}: no formulas")
        formulas = [parse(line, category, merged) for line in lines]
        if len(formulas) == 1:
            return formulas[0], merged
        if category != "quantum":
            raise CommandError("multiple formulas are only conjoined in the"
                               " quantum category")
        out = formulas[0]
        for g in formulas[1:]:
            out = n.QConj(out, g)
        return out, merged
    raise CommandError("a formula is required (--formula or --file)")


def _bound_aliases(text: str) -> tuple[frozenset, dict[str, int]]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    if not names:
        raise CommandError("empty bound")
    from .model_io import frame_indices

    table = frame_indices(names)
    return frozenset(table.values()), table


def _external_oracle(command: str):
    """Wrap `--oracle-cmd`: the formula text goes to the subprocess's stdin
    and one verdict line comes back: VALID, INVALID <json assignment>, or
    UNKNOWN <reason>.  Unknown answers fall through to the built-in oracle.
    """
    argv = shlex.split(command)

    def check(phi, budget=None):
        text = render(phi)
        try:
            out = subprocess.run(argv, input=text, capture_output=True,
                                 text=True, timeout=60).stdout.strip()
        except (OSError, subprocess.SubprocessError) as err:
            return arithmetic.Unknown(f"external oracle failed: {err}")
        head, _, rest = out.partition(" ")
        if head == "VALID":
            return arithmetic.Valid("external")
        if head == "INVALID":
            reals, cplx = {}, {}
            try:
                for key, value in json.loads(rest or "{}").items():
                    if key.startswith("x"):
                        reals[int(key[1:])] = float(value)
                    elif key.startswith("z"):
                        cplx[int(key[1:])] = complex(value[0], value[1])
            except (ValueError, TypeError, IndexError):
                return arithmetic.Unknown("external oracle sent a malformed witness")
            witness = semantics.Assignment(reals, cplx)
            try:
                if not arithmetic.eval_arith(phi, witness):
                    return arithmetic.Invalid(witness, "external")
            except EqplError:
                pass
            return arithmetic.Unknown("external witness did not falsify the formula")
        inner = arithmetic.oracle_check(phi, budget)
        if inner.kind == "unknown" and head == "UNKNOWN":
            return arithmetic.Unknown(rest or "external oracle answered UNKNOWN")
        return inner

    return check


def _report(args, command: str, verdict: str, diagnostics: list[str],
            started: float) -> None:
    if args.json:
        payload = {
            "command": command,
            "verdict": verdict,
            "diagnostics": diagnostics,
            "seed": args.seed,
            "timing": round(time.time() - started, 6),
        }
        print(json.dumps(payload))
    else:
        for line in diagnostics:
            print(line)
        print(verdict)


# ---------------------------------------------------------------------------
# commands

def _cmd_parse(args) -> tuple[str, list[str], bool]:
    aliases = dict(_bound_aliases(args.qubits)[1]) if args.qubits else {}
    ast, _ = _read_formula(args, aliases, args.category)
    return "parsed", [render(ast)], True


def _cmd_expand(args) -> tuple[str, list[str], bool]:
    aliases = dict(_bound_aliases(args.qubits)[1]) if args.qubits else {}
    ast, _ = _read_formula(args, aliases, args.category)
    return "expanded", [render(expand(ast))], True


def _cmd_check(args) -> tuple[str, list[str], bool]:
    w, rho, aliases = model_io.load_model_file(args.model)
    gamma, _ = _read_formula(args, aliases)
    ok = semantics.satisfies(w, rho, gamma, eps_cmp=args.tol)
    return ("satisfied" if ok else "not satisfied"), [], ok


def _cmd_eval(args) -> tuple[str, list[str], bool]:
    w, rho, aliases = model_io.load_model_file(args.model)
    term = parse(args.term, args.category, aliases)
    value = semantics.denote(term, w, rho)
    if isinstance(value, complex):
        text = f"{value.real:.12g} + i {value.imag:.12g}"
    else:
        text = f"{value:.12g}"
    return text, [], True


def _cmd_prove(args) -> tuple[str, list[str], bool]:
    with open(args.script, encoding="utf-8") as handle:
        derivation = calculus.parse_script(handle.read())
    oracle = _external_oracle(args.oracle_cmd) if args.oracle_cmd else None
    report = calculus.check_derivation(derivation, oracle=oracle)
    diagnostics = [f"line {entry.index}: {entry.reason}"
                   for entry in report.lines if not entry.ok]
    return ("ok" if report.ok else str(report)), diagnostics, report.ok


def _cmd_dnf(args) -> tuple[str, list[str], bool]:
    bound, aliases = _bound_aliases(args.bound)
    gamma, _ = _read_formula(args, dict(aliases))
    names = {v: k for k, v in aliases.items()}
    mols = modelfinder.quantum_dnf(gamma, bound)
    lines = [render(m.formula(), names) for m in mols]
    return f"{len(mols)} molecular formulas", lines, bool(mols)


def _cmd_solve(args) -> tuple[str, list[str], bool]:
    bound, aliases = _bound_aliases(args.bound)
    gamma, merged = _read_formula(args, dict(aliases))
    config = modelfinder.FindConfig(seed=args.seed, tol=args.tol)
    result = modelfinder.find_model(gamma, bound, config)
    if result.is_model:
        names = {v: k for k, v in merged.items()}
        if args.out:
            model_io.save_model_file(args.out, result.structure,
                                     result.assignment, names)
            return "model found", [f"model written to {args.out}"], True
        dump = model_io.dump_structure(result.structure, result.assignment, names)
        return "model found", [json.dumps(dump)], True
    return result.kind.replace("_", " "), result.report[-8:], False


def _cmd_validate(args) -> tuple[str, list[str], bool]:
    from .structures import validate_structure

    w, _, _ = model_io.load_model_file(args.model)
    diagnostics = validate_structure(w)
    return (("valid", [], True) if not diagnostics
            else ("invalid", [str(d) for d in diagnostics], False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqpl",
        description="workbench for exogenous quantum propositional logic")
    parser.add_argument("--seed", type=int, default=0, help="search seed")
    parser.add_argument("--tol", type=float, default=1e-8,
                        help="numeric tolerance for solving")
    parser.add_argument("--oracle-cmd", default=None,
                        help="external arithmetical oracle command")
    parser.add_argument("--json", action="store_true",
                        help="print a machine-readable report")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(fn=fn)
        return p

    p = add("parse", _cmd_parse, help="parse a formula and print it back")
    p.add_argument("--category", default="quantum",
                   choices=["classical", "real", "complex", "quantum"])
    p.add_argument("--formula")
    p.add_argument("--file")
    p.add_argument("--qubits", help="comma-separated alias names")

    p = add("expand", _cmd_expand, help="expand abbreviations to the core")
    p.add_argument("--category", default="quantum",
                   choices=["classical", "real", "complex", "quantum"])
    p.add_argument("--formula")
    p.add_argument("--file")
    p.add_argument("--qubits")

    p = add("check", _cmd_check, help="check satisfaction against a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--formula")
    p.add_argument("--file")

    p = add("eval", _cmd_eval, help="evaluate a term against a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--term", required=True)
    p.add_argument("--category", default="real", choices=["real", "complex"])

    p = add("prove", _cmd_prove, help="check a derivation script")
    p.add_argument("--script", required=True)

    p = add("dnf", _cmd_dnf, help="quantum disjunctive normal form")
    p.add_argument("--bound", required=True)
    p.add_argument("--formula")
    p.add_argument("--file")

    p = add("solve", _cmd_solve, help="search for a model of a formula")
    p.add_argument("--bound", required=True)
    p.add_argument("--formula")
    p.add_argument("--file")
    p.add_argument("--out", help="write the model file here")

    p = add("validate-model", _cmd_validate, help="validate a model file")
    p.add_argument("--model", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.time()
    try:
        verdict, diagnostics, ok = args.fn(args)
    except (EqplError, OSError, json.JSONDecodeError) as err:
        _report(args, args.command, f"error: {err}", [], started)
        return 2
    _report(args, args.command, verdict, diagnostics, started)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
