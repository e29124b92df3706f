"""Command line interface.

Subcommands: group verify, twisted chain, twisted decide, depth, growth,
examples heisenberg, examples dim5, witness lower-bound. Exit code 0 on
success, 1 on validation errors, 2 on budget exhaustion.
"""

import argparse
import json
import sys

from .errors import BudgetExceededError, PreconditionError, TwistsepError, ValidationError
from . import groups, serialize
from .growth import (ExperimentConfig, dim5_scenario, fit_exponent,
                     growth_rows_to_csv, heisenberg_case,
                     heisenberg_central_pair_rows, lower_bound_witnesses,
                     measure_conj_growth, plot_script_for)
from .malcev import verify_hom, verify_presentation
from .quotients import congruence_depth
from .twisted import TwistedChain, TwistedWitness, is_twisted_conjugate


def _load_group(ref):
    builtin = {"heisenberg": groups.heisenberg, "dim5": groups.dim5}
    if ref in builtin:
        return builtin[ref]()
    if ref.startswith("abelian:"):
        return groups.free_abelian(int(ref.split(":", 1)[1]))
    return serialize.presentation_from_dict(serialize.load_json(ref))


def _load_phi(ref, pres):
    if ref == "id":
        from .malcev import identity_automorphism
        return identity_automorphism(pres)
    if ref.startswith("heis:"):
        vals = [int(t) for t in ref.split(":", 1)[1].split(",")]
        if len(vals) == 4:
            vals += [0, 0]
        a, b, c, d, e, f = vals
        return groups.heisenberg_automorphism(pres, [[a, b], [c, d]], e, f)
    return serialize.hom_from_dict(serialize.load_json(ref), pres)


def _parse_element(text, pres):
    vec = tuple(int(t) for t in text.split(","))
    return pres.check_element(vec)


def cmd_group_verify(args):
    pres = _load_group(args.group)
    problems = verify_presentation(pres)
    if problems:
        for p in problems:
            print("FAIL:", p)
        raise ValidationError("presentation verification failed")
    print(f"ok: {len(pres.basis)} generators, class {pres.nilpotency_class}, "
          f"hirsch {pres.h}")


def cmd_twisted_chain(args):
    pres = _load_group(args.group)
    phi = _load_phi(args.phi, pres)
    problems = verify_hom(phi, check_automorphism=True)
    if problems:
        raise ValidationError("; ".join(problems))
    chain = TwistedChain(pres, phi)
    print(serialize.dump_json(serialize.chain_to_dict(chain), args.output))


def cmd_twisted_decide(args):
    pres = _load_group(args.group)
    phi = _load_phi(args.phi, pres)
    x = _parse_element(args.x, pres)
    y = _parse_element(args.y, pres)
    res = is_twisted_conjugate(pres, phi, x, y)
    if isinstance(res, TwistedWitness):
        print(serialize.dump_json(serialize.witness_to_dict(pres, phi, res),
                                  args.output))
    else:
        print(json.dumps({"conjugate": False, "obstruction_level": res.level,
                          "obstruction": list(res.obstruction)}, indent=2))


def cmd_depth(args):
    pres = _load_group(args.group)
    phi = _load_phi(args.phi, pres)
    x = _parse_element(args.x, pres)
    y = _parse_element(args.y, pres)
    res = congruence_depth(pres, phi, x, y, order_budget=args.order_budget,
                           modulus_budget=args.modulus_budget)
    print(serialize.dump_json(serialize.depth_result_to_dict(x, y, args.phi, res),
                              args.output))
    if not res.separated:
        raise BudgetExceededError("no separating congruence quotient within budget")


def cmd_growth(args):
    cfg_data = serialize.load_json(args.config)
    pres = _load_group(cfg_data["group"])
    autos = [(ref, _load_phi(ref, pres)) for ref in cfg_data["automorphisms"]]
    config = ExperimentConfig(
        group=pres,
        automorphisms=autos,
        radii=list(cfg_data["radii"]),
        ball_cap=cfg_data.get("ball_cap", 200_000),
        order_budget=cfg_data.get("order_budget", 2000),
        mode=cfg_data.get("mode", "exhaustive"),
        sample_pairs=cfg_data.get("sample_pairs", 200),
        seed=cfg_data.get("seed", 20240214),
        tconj=cfg_data.get("tconj", False),
    )
    rows = measure_conj_growth(config)
    out = cfg_data.get("output", "growth.csv")
    growth_rows_to_csv(rows, out)
    if cfg_data.get("plot_script"):
        plot_script_for(out, cfg_data["plot_script"])
    usable = [(r.n, r.depth) for r in rows if r.depth > 0]
    print(f"wrote {len(rows)} rows to {out}")
    if len(usable) >= 3:
        expo, r2 = fit_exponent(usable)
        print(f"fitted exponent {expo:.3f} (r2 {r2:.3f})")
    if any(r.budget_exhausted for r in rows):
        raise BudgetExceededError("some rows hit the order budget")


def cmd_examples_heisenberg(args):
    pres = groups.heisenberg()
    phi = _load_phi(args.phi, pres)
    report = heisenberg_case(pres, phi)
    print(json.dumps(report, indent=2))
    if report["case"] == 3 and args.growth:
        rows = heisenberg_central_pair_rows(list(range(1, args.growth + 1)))
        expo, r2 = fit_exponent(rows)
        print(json.dumps({"central_pair_rows": rows,
                          "fit_exponent": round(expo, 3), "r2": round(r2, 3)}))


def cmd_examples_dim5(args):
    res = dim5_scenario(samples=args.samples, max_norm=args.max_norm,
                        growth_radii=(1, 2) if args.growth else ())
    printable = {
        "n2_matches": res["n2_matches"],
        "psi_b1": list(res["psi_b1"]),
        "psi_b2": list(res["psi_b2"]),
        "sqrt_fit_exponent": round(res["sqrt_fit_exponent"], 3),
        "central_quotient_hirsch": list(res["central_quotient_hirsch"]),
    }
    print(json.dumps(printable, indent=2))


def cmd_witness_lower_bound(args):
    primes = [int(t) for t in args.primes.split(",")]
    out = lower_bound_witnesses(primes)
    printable = [{"prime": w["prime"], "depth": w["depth"],
                  "moduli": list(w["moduli"])} for w in out]
    print(json.dumps(printable, indent=2))


def build_parser():
    ap = argparse.ArgumentParser(
        prog="twistsep",
        description="exact twisted conjugacy tools for nilpotent groups")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("group", help="presentation utilities")
    gsub = g.add_subparsers(dest="subcommand", required=True)
    gv = gsub.add_parser("verify", help="verify a presentation file")
    gv.add_argument("group")
    gv.set_defaults(func=cmd_group_verify)

    t = sub.add_parser("twisted", help="twisted conjugacy computations")
    tsub = t.add_subparsers(dest="subcommand", required=True)
    tc = tsub.add_parser("chain", help="compute the twisted centralizer chain")
    tc.add_argument("group")
    tc.add_argument("phi")
    tc.add_argument("--output")
    tc.set_defaults(func=cmd_twisted_chain)
    td = tsub.add_parser("decide", help="decide twisted conjugacy of two elements")
    td.add_argument("group")
    td.add_argument("phi")
    td.add_argument("x")
    td.add_argument("y")
    td.add_argument("--output")
    td.set_defaults(func=cmd_twisted_decide)

    d = sub.add_parser("depth", help="smallest separating congruence quotient")
    d.add_argument("group")
    d.add_argument("phi")
    d.add_argument("x")
    d.add_argument("y")
    d.add_argument("--order-budget", type=int, default=5000)
    d.add_argument("--modulus-budget", type=int, default=None,
                   help="cap on every individual congruence modulus")
    d.add_argument("--output")
    d.set_defaults(func=cmd_depth)

    gr = sub.add_parser(
        "growth", help="growth measurement from a config file",
        epilog="CSV columns: n, phi, depth, x, y, moduli (semicolon-joined "
               "exponent vectors and moduli), exhaustive, budget_exhausted")
    gr.add_argument("config")
    gr.set_defaults(func=cmd_growth)

    ex = sub.add_parser("examples", help="worked example scenarios")
    exsub = ex.add_subparsers(dest="subcommand", required=True)
    eh = exsub.add_parser("heisenberg")
    eh.add_argument("--phi", default="id")
    eh.add_argument("--growth", type=int, default=0,
                    help="also fit the central pair rows up to this radius")
    eh.set_defaults(func=cmd_examples_heisenberg)
    e5 = exsub.add_parser("dim5")
    e5.add_argument("--samples", type=int, default=25)
    e5.add_argument("--max-norm", type=int, default=30)
    e5.add_argument("--growth", action="store_true")
    e5.set_defaults(func=cmd_examples_dim5)

    w = sub.add_parser("witness", help="lower bound witness families")
    wsub = w.add_subparsers(dest="subcommand", required=True)
    wl = wsub.add_parser("lower-bound")
    wl.add_argument("--primes", default="2,3,5")
    wl.set_defaults(func=cmd_witness_lower_bound)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args.func(args)
    except BudgetExceededError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, PreconditionError, TwistsepError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
