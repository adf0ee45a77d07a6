'''
hsketch command line
================================================================
Subcommands

    gen         write a generated point file
    plan        print the cascade plan of a point file
    sketch      write the binary sketch file of a point file
    estimate    recover squared distances from a sketch file as CSV
    verify      Monte-Carlo check of the sketch guarantee
    compare-jl  side by side trials of the cascade and the JL baseline
    kernel      unbiasedness check of a single sign feature layer
    sweep       bit counts of both sketches over minimum distances

Exit codes: 0 success, 1 usage, 2 precondition, 3 data integrity,
4 verification failure.

Example
-------
    hsketch gen --mode sphere --n 100 --d 64 --min-dist 0.3 --seed 7 -o points.txt
    hsketch plan points.txt --epsilon 0.2 --seed 1
    hsketch sketch points.txt --epsilon 0.2 --seed 1 -o points.hsk
    hsketch estimate points.hsk --all --truth points.txt
    hsketch verify points.txt --epsilon 0.2 --trials 50 --seed 1000

'''


#================================================================
#%% Imports
#================================================================
# Standard library
import sys, math
import argparse

# Local libraries
from .hsk_support import (TablePrinter,merge_config,module_log,set_module_verbosity,
                          SketchError,VerificationError,
                          EXIT_OK,EXIT_USAGE)
from .hsk_planner import make_plan,with_seed,check_plan_compatible,asymptotic_bits
from .hsk_cascade import sketch_set
from .hsk_recovery import estimate_frame
from .hsk_jl_baseline import jl_bits,jl_asymptotic_bits,min_distance
from .hsk_storage import (read_points,points_to_text,plan_to_text,plan_from_text,
                          plan_storage_bits,write_sketch,read_sketch)
from .hsk_harness import (ENGINES,gen_sphere,gen_ball,gen_close_pairs,true_sq_dists,
                          run_trials,compare_jl,kernel_unbiasedness_test,
                          bit_scaling_sweep,fit_growth_exponents)

#================================================================
#%% Constants
#================================================================
GEN_MODES = ('sphere','ball','close')

DEFAULT_KERNEL_INNERS = [-0.9,0.0,1/3,0.5,0.99]
DEFAULT_SWEEP_M = [0.3,0.1,0.03,0.01]

log = module_log('cli')

#================================================================
#%% Helpers
#================================================================
def _config(args,**overrides):
    return merge_config(n_constant=args.n_constant,
                        target=args.target,
                        workers=args.workers,
                        verbosity=args.verbosity,
                        **overrides)


def _write_text(filename,text):
    if filename in (None,'-'):
        sys.stdout.write(text)
        return
    with open(filename,'w') as fh:
        fh.write(text)
    log(f'Wrote [{filename}]')


def _write_csv(filename,df):
    _write_text(filename,df.to_csv(index=False))


def _read_pairs(filename):
    """
    Pairs file, one "i j" or "i,j" per line, '#' comments allowed
    """
    pairs = []
    with open(filename,'r') as fh:
        for line_no,line in enumerate(fh,start=1):
            stripped = line.split('#')[0].strip()
            if not stripped:
                continue
            fields = stripped.replace(',',' ').split()
            try:
                i,j = (int(v) for v in fields)
            except ValueError:
                raise SketchError(f'{filename}:{line_no}: expected two indices not [{stripped}]') from None
            pairs.append((i,j))
    return pairs

#================================================================
#%% Subcommands
#================================================================
def cmd_gen(args):
    if args.mode=='sphere':
        points = gen_sphere(args.n,args.d,args.min_dist,args.seed,args.retry_budget)
    elif args.mode=='ball':
        points = gen_ball(args.n,args.d,args.rho,args.min_dist,args.seed,args.retry_budget)
    else:
        points = gen_close_pairs(args.n,args.d,args.min_dist,args.seed,args.retry_budget)

    _write_text(args.output,points_to_text(points))
    return EXIT_OK


def cmd_plan(args):
    config = _config(args)
    points = read_points(args.input)
    plan = make_plan(points,args.epsilon,args.seed,config)

    m_raw = min_distance(points)
    extra = dict(storage_bits=plan_storage_bits(plan),
                 asymptotic_bits=asymptotic_bits(plan.n,plan.m,plan.epsilon),
                 jl_bits=jl_bits(plan.n,m_raw,plan.epsilon,float(config.coord_range)),
                 jl_asymptotic_bits=jl_asymptotic_bits(plan.n,m_raw,plan.epsilon))

    _write_text(args.output,plan_to_text(plan,extra))

    if args.verbosity!='none':
        table = TablePrinter(['level','D','level bound'],formats=['%i','%i','%.4g'],stream=sys.stderr)
        table.header()
        for j,D in enumerate(plan.dims,start=1):
            table.addrow([j,D,plan.level_bound(j)])
    return EXIT_OK


def cmd_sketch(args):
    config = _config(args)
    points = read_points(args.input)

    if args.plan:
        with open(args.plan,'r') as fh:
            plan = plan_from_text(fh.read(),source=args.plan)
        check_plan_compatible(plan,points)
        if args.epsilon is not None and not math.isclose(args.epsilon,plan.epsilon,rel_tol=1e-12):
            raise SketchError(f'--epsilon [{args.epsilon}] disagrees with the plan epsilon [{plan.epsilon}]')
        if args.seed is not None:
            plan = with_seed(plan,args.seed)
    else:
        if args.epsilon is None or args.seed is None:
            raise SketchError('sketch needs --epsilon and --seed, or --plan')
        plan = make_plan(points,args.epsilon,args.seed,config)

    bundle = sketch_set(points,plan,config)
    size = write_sketch(args.output,bundle)
    log(f'Sketch of {bundle.n} points, N = {plan.N}: {size} bytes','brief')
    return EXIT_OK


def cmd_estimate(args):
    bundle = read_sketch(args.sketch)

    pairs = None
    if args.pair:
        pairs = [tuple(p) for p in args.pair]
    elif args.pairs_file:
        pairs = _read_pairs(args.pairs_file)

    truth = true_sq_dists(read_points(args.truth)) if args.truth else None

    df = estimate_frame(bundle,pairs,truth,diagnostics=args.diagnostics)
    _write_csv(args.output,df)
    return EXIT_OK


def cmd_verify(args):
    config = _config(args,engine=args.engine,n_scale=args.n_scale,
                     include_jl=args.include_jl,check_levels=not args.no_levels)
    points = read_points(args.input)

    report = run_trials(points,args.epsilon,args.trials,args.seed,config)
    print(report.summary_table())

    if args.csv:
        report.to_csv(args.csv)
    if args.results and report.ds_results is not None:
        report.ds_results.save.to_json(args.results)

    if args.expect_failures:
        if not report.any_failure:
            raise VerificationError(f'No trial failed at N = {report.plan.N}')
        return EXIT_OK

    report.check()
    return EXIT_OK


def cmd_compare_jl(args):
    config = _config(args,engine=args.engine)
    points = read_points(args.input)

    table = compare_jl(points,args.epsilon,args.trials,args.seed,config)
    _write_csv(args.output,table)

    rejected = table.loc[~table['accepted'],'method'].tolist()
    if rejected:
        raise VerificationError(f'Success lower bound below target for {rejected}')
    return EXIT_OK


def cmd_kernel(args):
    config = _config(args)

    table = TablePrinter(['inner','expected','mean','std error','z','passed'],
                         formats=['%.4g','%.6f','%.6f','%.3g','%.3f','%s'])
    table.header()

    failed = []
    for inner in args.inner:
        result = kernel_unbiasedness_test(inner,args.d,args.D,args.trials,args.seed,
                                          float(config.band_sigmas))
        table.addrow([result.inner,result.expected,result.mean,result.std_error,
                      result.z_score,result.passed])
        if not result.passed:
            failed.append(inner)

    if failed:
        raise VerificationError(f'Kernel mean outside {config.band_sigmas} standard errors for inner {failed}')
    return EXIT_OK


def cmd_sweep(args):
    config = _config(args)

    sweep = bit_scaling_sweep(args.n,args.epsilon,args.m,config)
    _write_csv(args.output,sweep)

    fit = fit_growth_exponents(sweep,args.epsilon)
    table = TablePrinter(['method','fitted','predicted','deviation','ok'],
                         formats=['%s','%.4f','%.4f','%.3f','%s'],stream=sys.stderr)
    table.header()
    table.addrow(['hypersketch',fit.hsk_exponent,fit.hsk_predicted,fit.hsk_deviation,fit.hsk_ok])
    table.addrow(['jl',fit.jl_exponent,fit.jl_predicted,fit.jl_deviation,fit.jl_ok])

    if args.check and not (fit.hsk_ok and fit.jl_ok):
        raise VerificationError('Fitted bit growth differs from the predicted exponents')
    return EXIT_OK

#================================================================
#%% Parser
#================================================================
def build_parser():
    """
    argparse parser with one subparser per command
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--verbosity',choices=['none','brief','verbose'],default='brief',
                        help='log detail on standard error')
    common.add_argument('--n-constant',type=float,default=48.0,
                        help='multiplier of the final sketch dimension')
    common.add_argument('--target',choices=['multiplicative','additive'],default='multiplicative',
                        help='guarantee the plan is sized for')
    common.add_argument('--workers',type=int,default=1,
                        help='threads for the Gaussian projections')

    parser = argparse.ArgumentParser(prog='hsketch',
                                     description='Cascade sign sketches of point sets')
    sub = parser.add_subparsers(dest='command',required=True)

    p = sub.add_parser('gen',parents=[common],help='generate a point file')
    p.add_argument('--mode',choices=GEN_MODES,default='sphere')
    p.add_argument('--n',type=int,required=True)
    p.add_argument('--d',type=int,required=True)
    p.add_argument('--min-dist',type=float,required=True,
                   help='minimum distance, the exact close pair distance in close mode')
    p.add_argument('--rho',type=float,default=0.25,help='ball mode squared norm lower bound')
    p.add_argument('--seed',type=int,required=True)
    p.add_argument('--retry-budget',type=int,default=2000)
    p.add_argument('-o','--output',default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser('plan',parents=[common],help='print the cascade plan')
    p.add_argument('input')
    p.add_argument('--epsilon',type=float,required=True)
    p.add_argument('--seed',type=int,required=True)
    p.add_argument('-o','--output',default=None)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser('sketch',parents=[common],help='write a sketch file')
    p.add_argument('input')
    p.add_argument('--epsilon',type=float,default=None)
    p.add_argument('--seed',type=int,default=None)
    p.add_argument('--plan',default=None,help='plan dump written by the plan command')
    p.add_argument('-o','--output',required=True)
    p.set_defaults(func=cmd_sketch)

    p = sub.add_parser('estimate',parents=[common],help='recover squared distances')
    p.add_argument('sketch')
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument('--all',action='store_true',help='every pair i < j')
    group.add_argument('--pair',nargs=2,type=int,action='append',metavar=('I','J'))
    group.add_argument('--pairs-file',default=None)
    p.add_argument('--truth',default=None,help='point file for true distances')
    p.add_argument('--diagnostics',action='store_true',help='add est_inner and raw_sq_dist columns')
    p.add_argument('-o','--output',default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser('verify',parents=[common],help='Monte-Carlo check of the guarantee')
    p.add_argument('input')
    p.add_argument('--epsilon',type=float,required=True)
    p.add_argument('--trials',type=int,default=50)
    p.add_argument('--seed',type=int,default=0,help='seed of the first trial')
    p.add_argument('--engine',choices=ENGINES,default='exact')
    p.add_argument('--n-scale',type=float,default=1.0,help='final dimension multiplier')
    p.add_argument('--include-jl',action='store_true')
    p.add_argument('--no-levels',action='store_true',help='skip level-wise error checks')
    p.add_argument('--expect-failures',action='store_true',
                   help='succeed only if some trial fails, for undersized ablations')
    p.add_argument('--csv',default=None,help='per trial CSV')
    p.add_argument('--results',default=None,help='trial dataset as JSON')
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser('compare-jl',parents=[common],help='cascade against the JL baseline')
    p.add_argument('input')
    p.add_argument('--epsilon',type=float,required=True)
    p.add_argument('--trials',type=int,default=50)
    p.add_argument('--seed',type=int,default=0)
    p.add_argument('--engine',choices=ENGINES,default='exact')
    p.add_argument('-o','--output',default=None)
    p.set_defaults(func=cmd_compare_jl)

    p = sub.add_parser('kernel',parents=[common],help='sign feature unbiasedness test')
    p.add_argument('--inner',type=float,nargs='+',default=DEFAULT_KERNEL_INNERS)
    p.add_argument('--d',type=int,default=64)
    p.add_argument('--D',type=int,default=200000)
    p.add_argument('--trials',type=int,default=10)
    p.add_argument('--seed',type=int,default=0)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser('sweep',parents=[common],help='bit scaling over minimum distances')
    p.add_argument('--n',type=int,default=100)
    p.add_argument('--epsilon',type=float,default=0.2)
    p.add_argument('--m',type=float,nargs='+',default=DEFAULT_SWEEP_M)
    p.add_argument('--check',action='store_true',help='fail if the fitted growth is off')
    p.add_argument('-o','--output',default=None)
    p.set_defaults(func=cmd_sweep)

    return parser

#================================================================
#%% Entry point
#================================================================
def main(argv=None):
    """
    Run one subcommand, returning the exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code in (0,None) else EXIT_USAGE

    set_module_verbosity(args.verbosity)

    try:
        return args.func(args)
    except SketchError as err:
        print(f'hsketch {args.command}: {err.__class__.__name__}: {err}',file=sys.stderr)
        return err.exit_code
    except (IndexError,ValueError,OSError,AssertionError) as err:
        print(f'hsketch {args.command}: {err.__class__.__name__}: {err}',file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as err:
        print(f'hsketch {args.command}: {err}',file=sys.stderr)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
