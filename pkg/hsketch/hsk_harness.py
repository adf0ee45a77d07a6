'''
Trial harness
================================================================
Point set generators, exact truth, and the Monte-Carlo checks of the
sketch guarantees.

Trials are run with the trial sequence framework from hsk_core:

    CascadeTrialSequence
    - SeedCondition       master seed of each trial, seed0 .. seed0+T-1
    - PlanCheck           startup: plan matches the measured point set
    - CascadeTrial        sketch, recover every pair, score against truth
    - JlTrial             optional JL baseline on the same seed

Two trial engines produce the sketch inner products:

* 'exact' : the real cascade (hsk_cascade), bits as they would be stored
* 'gram'  : for a fixed point set the level j sign patterns are iid rows
            of sign(N(0, G_(j-1))) with G the Gram matrix of the level
            before. Sampling those n dimensional Gaussians directly is
            equal in distribution to the cascade and keeps multi-level
            checks at desk scale. Nothing storable is produced.

Example
-------
>>> points = gen_sphere(10,16,1.0,seed=3)
>>> report = run_trials(points,0.3,trials=12,seed0=100)
>>> report.accepted
True

'''


#================================================================
#%% Imports
#================================================================
# Standard library
import math
import dataclasses

# Third party libraries
import numpy as np
import pandas as pd
import xarray as xr
from scipy import stats
from scipy.spatial import distance

# Local libraries
from .hsk_support import (ObjDict,TablePrinter,merge_config,module_log,config_verbosity,
                          PreconditionError,InfeasiblePackingError,VerificationError)
from .hsk_core import AbstractTrialSequence,AbstractMeasurement,AbstractSetupConditions,with_results
from .hsk_iterates import f,f_iter
from .hsk_signsketch import hamming_rows,inner_products_from_hamming,pack_bit_matrix,PackedSignVector,inner_product
from .hsk_gaussian import check_seed
from .hsk_pointset import PointSet,MODE_SPHERE,MODE_BALL
from .hsk_planner import (CascadePlan,TARGET_ADDITIVE,make_plan,schedule,with_seed,
                          scale_final_dimension,check_plan_compatible,asymptotic_bits)
from .hsk_cascade import CascadeLayer,sketch_levels,sketch_set,quantize_norms,dequantize_norms
from .hsk_recovery import recover_inner,recover_sq_dist_ball
from .hsk_jl_baseline import (jl_sketch,jl_sq_dists,jl_bits,jl_dimension,grid_step,
                              coordinate_bits,jl_asymptotic_bits,min_distance)

#================================================================
#%% Constants
#================================================================
ENGINE_EXACT = 'exact'
ENGINE_GRAM = 'gram'
ENGINES = (ENGINE_EXACT,ENGINE_GRAM)

# Columns of the gram engine's Gaussian sample blocks
GRAM_BLOCK = 65536

# Separation of the background points in gen_close_pairs
CLOSE_PAIR_MIN_SEPARATION = 0.3
CLOSE_PAIR_MAX_SEPARATION = 1.0

TRIAL_FIELDS = ['all_pairs_ok','failed_pairs','max_rel_error',
                'max_additive_error_vs_bound','worst_i','worst_j']
JL_FIELDS = ['jl_all_pairs_ok','jl_max_rel_error','jl_clamp_count']
BOOL_FIELDS = ['all_pairs_ok','jl_all_pairs_ok']
INT_FIELDS = ['failed_pairs','worst_i','worst_j','jl_clamp_count']

COMPARE_COLUMNS = ['method','bits_total','bits_asymptotic','max_rel_error',
                   'success_rate','lower_bound','target_rate','accepted']

# Relative tolerance on fitted growth exponents
GROWTH_TOLERANCE = 0.15

log = module_log('harness')

#================================================================
#%% Generators
#================================================================
def _place_directions(rng,n,d,m_target,retry_budget):
    """
    Rejection sampling of n unit vectors, every pair x, y with
    |x-y| >= m_target and |x+y| >= m_target
    """
    m_sq = m_target**2
    placed = np.empty((n,d))
    count = 0
    rejections = 0

    while count<n:
        z = rng.standard_normal(d)
        norm = np.linalg.norm(z)
        if norm==0:
            continue
        x = z/norm

        if count:
            minus = placed[:count] - x
            plus = placed[:count] + x
            gaps = np.minimum(np.einsum('ij,ij->i',minus,minus),np.einsum('ij,ij->i',plus,plus))
            if gaps.min() < m_sq:
                rejections += 1
                if rejections>retry_budget:
                    raise InfeasiblePackingError(f'Placed {count} of {n} points at separation [{m_target}] '
                                                 f'before {retry_budget} consecutive rejections')
                continue

        placed[count] = x
        count += 1
        rejections = 0

    return placed


def _check_generator_args(n,d):
    if n<2:
        raise PreconditionError(f'Generators need n >= 2 not [{n}]')
    if d<2:
        raise PreconditionError(f'Generators need d >= 2 not [{d}]')


def gen_sphere(n,d,m_target,seed,retry_budget=2000):
    """
    Unit vectors with pairwise distance at least m_target

    Points are drawn uniformly on the sphere and rejected if they come
    closer than m_target to an accepted point or to its antipode, so
    1-|<x,y>| >= m_target^2/2 for every pair.

    Parameters
    ----------
    n, d : int
        number of points and dimension, both >= 2
    m_target : float
        minimum distance in (0, sqrt 2)
    seed : int
    retry_budget : int, optional
        consecutive rejections allowed before giving up

    Returns
    -------
    PointSet
        sphere mode

    Raises
    ------
    InfeasiblePackingError
        m_target >= sqrt 2 or the retry budget ran out
    """
    _check_generator_args(n,d)
    if not m_target>0:
        raise PreconditionError(f'Minimum distance must be positive not [{m_target}]')
    if m_target**2>=2:
        raise InfeasiblePackingError(f'No two unit vectors are [{m_target}] from each other and from their antipodes, packing bound is sqrt(2)')

    rng = np.random.default_rng(seed)
    points = _place_directions(rng,n,d,m_target,retry_budget)

    log(f'Generated {n} sphere points in {d} dimensions, separation {m_target}')
    return PointSet(points,MODE_SPHERE,dict(generator='gen_sphere',n=n,d=d,m_target=m_target,seed=seed))


def gen_close_pairs(n,d,m_exact,seed,retry_budget=2000):
    """
    Sphere set whose points 0 and 1 are exactly m_exact apart

    Point 1 is point 0 rotated by the angle 2 arcsin(m_exact/2) towards a
    random orthogonal direction. The other points keep at least
    max(4 m_exact, 0.3), capped at 1, from point 0 and its antipode so the
    close pair sets the minimum distance.

    Raises
    ------
    PreconditionError
        m_exact outside (0, 0.5)
    InfeasiblePackingError
        background points could not be placed
    """
    _check_generator_args(n,d)
    if not 0<m_exact<0.5:
        raise PreconditionError(f'Close pair distance must be in (0,0.5) not [{m_exact}]')

    separation = min(max(4*m_exact,CLOSE_PAIR_MIN_SEPARATION),CLOSE_PAIR_MAX_SEPARATION)

    rng = np.random.default_rng(seed)
    base = _place_directions(rng,n - 1,d,separation,retry_budget)

    p = base[0]
    u = rng.standard_normal(d)
    u -= (u @ p)*p
    u /= np.linalg.norm(u)

    theta = 2*np.arcsin(m_exact/2)
    q = np.cos(theta)*p + np.sin(theta)*u
    q /= np.linalg.norm(q)

    points = np.vstack([p,q,base[1:]])

    log(f'Generated {n} sphere points with a close pair at {m_exact}')
    return PointSet(points,MODE_SPHERE,dict(generator='gen_close_pairs',n=n,d=d,
                                            m_exact=m_exact,seed=seed,close_pair=[0,1]))


def gen_ball(n,d,rho_target,m_target,seed,retry_budget=2000):
    """
    Ball points with norms in [sqrt(rho_target), 1] and separated directions

    rho_target = 1 gives unit vectors, returned as a sphere mode set.

    Parameters
    ----------
    n, d : int
    rho_target : float
        in (0,1], lower bound on the squared norms
    m_target : float
        minimum distance between normalised directions
    seed : int

    Returns
    -------
    PointSet
    """
    _check_generator_args(n,d)
    if not 0<rho_target<=1:
        raise PreconditionError(f'Rho must be in (0,1] not [{rho_target}]')

    if rho_target==1:
        points = gen_sphere(n,d,m_target,seed,retry_budget)
        points.provenance.update(generator='gen_ball',rho_target=1.0)
        return points

    if m_target**2>=2:
        raise InfeasiblePackingError(f'Direction separation [{m_target}] is beyond the packing bound sqrt(2)')

    rng = np.random.default_rng(seed)
    directions = _place_directions(rng,n,d,m_target,retry_budget)

    # Lifted a hair so recomputed norms stay at or above sqrt(rho)
    low = min(1.0,math.sqrt(rho_target)*(1 + 1e-12))
    norms = rng.uniform(low,1.0,size=n)

    log(f'Generated {n} ball points in {d} dimensions, rho {rho_target}, separation {m_target}')
    return PointSet(directions*norms[:,None],MODE_BALL,
                    dict(generator='gen_ball',n=n,d=d,rho_target=rho_target,m_target=m_target,seed=seed))

#================================================================
#%% Truth and statistics
#================================================================
def true_sq_dists(points):
    """
    Exact squared distances, n x n with zero diagonal

    >>> true_sq_dists(PointSet([[1,0],[0,1]],'sphere'))
    array([[0., 2.],
           [2., 0.]])
    """
    X = points.points if isinstance(points,PointSet) else np.atleast_2d(points)
    return distance.squareform(distance.pdist(X,'sqeuclidean'))


def direction_sq_dists(points):
    """Squared distances between the normalised points"""
    return distance.squareform(distance.pdist(points.normalized(),'sqeuclidean'))


def binomial_lower_bound(successes,trials,confidence=0.95):
    """
    One sided Clopper-Pearson lower bound on a success probability

    >>> round(binomial_lower_bound(50,50),4)
    0.9418
    """
    if trials==0:
        return float('nan')
    if successes==0:
        return 0.0
    return float(stats.beta.ppf(1 - confidence,successes,trials - successes + 1))


def inner_product_matrix(words,nbits):
    """
    All pairwise sketch inner products of a packed word matrix

    Returns
    -------
    ndarray, shape (n, n)
    """
    n = words.shape[0]
    out = np.empty((n,n))
    for i in range(n):
        out[i] = inner_products_from_hamming(hamming_rows(words[i],words),nbits)
    return out


def simulate_level_inner_products(points,plan,block=GRAM_BLOCK):
    """
    Gram engine: sketch inner products of every level, by simulation

    Level 1 projects the directions with a d x D_1 Gaussian block. Level
    j > 1 draws D_j Gaussian vectors in R^n with covariance G_(j-1), the
    level j-1 inner product matrix, and takes their signs.

    Parameters
    ----------
    points : PointSet
    plan : CascadePlan
        dims and master_seed are used
    block : int, optional
        Gaussian columns drawn at once

    Returns
    -------
    list of ndarray
        the n x n inner product matrix of each level
    """
    factor = points.normalized()
    levels = []

    for j,D in enumerate(plan.dims,start=1):
        rng = np.random.default_rng([plan.master_seed,j])
        gram = np.zeros((points.n,points.n))

        for start in range(0,D,block):
            width = min(block,D - start)
            projected = factor @ rng.standard_normal((factor.shape[1],width))
            signs = np.where(projected>=0,1.0,-1.0)
            gram += signs @ signs.T

        gram /= D
        levels.append(gram)

        w,V = np.linalg.eigh(gram)
        factor = V*np.sqrt(np.clip(w,0,None))

        log(f'Simulated level {j}, D = {D}')

    return levels


def score_trial(plan,points,inner,truth,direction_truth):
    """
    Recover every pair from final level inner products and score it

    Returns
    -------
    ObjDict
        all_pairs_ok, failed_pairs, max_rel_error,
        max_additive_error_vs_bound, worst_i, worst_j

    The additive ratio compares the recovered direction distance
    2 - 2 g_l(inner) against eps' |x^-y^|^(2-2^(1-l)). Additive plans
    succeed on that ratio, multiplicative plans on the relative error.
    """
    i,j = np.triu_indices(points.n,1)
    final = np.asarray(inner)[i,j]
    est_inner = recover_inner(final,plan.ell)

    if plan.mode==MODE_BALL:
        norms = dequantize_norms(quantize_norms(points.norms,plan.norm_step),plan.norm_step)
        est,_ = recover_sq_dist_ball(final,plan.ell,norms[i],norms[j])
    else:
        est = 2 - 2*est_inner

    true = truth[i,j]
    rel = np.abs(est - true)/true

    if plan.working_epsilon is None:
        additive = np.full(rel.shape,np.nan)
    else:
        dir_true = direction_truth[i,j]
        additive = np.abs((2 - 2*est_inner) - dir_true)/plan.additive_bound(dir_true)

    if plan.target==TARGET_ADDITIVE:
        failed = int(np.count_nonzero(~(additive<=1)))
    else:
        failed = int(np.count_nonzero(rel>plan.epsilon))

    worst = int(np.argmax(rel))
    return ObjDict(all_pairs_ok=failed==0,
                   failed_pairs=failed,
                   max_rel_error=float(rel[worst]),
                   max_additive_error_vs_bound=float(np.max(additive)),
                   worst_i=int(i[worst]),
                   worst_j=int(j[worst]))


def level_error_ratios(plan,points,inners):
    """
    max over pairs of |<phi_j x,phi_j y> - f_j(<x,y>)| / level_bound(j)

    Values at most 1 mean the level stayed inside its error budget.
    """
    i,j = np.triu_indices(points.n,1)
    X = points.normalized()
    cos = np.clip(np.einsum('ik,ik->i',X[i],X[j]),-1,1)

    ratios = []
    for level,G in enumerate(inners,start=1):
        err = np.max(np.abs(G[i,j] - f_iter(cos,level)))
        ratios.append(err/plan.level_bound(level))
    return np.array(ratios)

#================================================================
#%% Trial sequence classes
#================================================================
class SeedCondition(AbstractSetupConditions):
    name = 'seed'

    def initialise(self):
        self.values = [0]
        self._setpoint = 0

    @property
    def actual(self):
        return self._setpoint

    @property
    def setpoint(self):
        return self._setpoint

    @setpoint.setter
    def setpoint(self,value):
        self.log(f'Master seed = {value}')
        self._setpoint = check_seed(value)


class PlanCheck(AbstractMeasurement):
    """
    Startup check that the plan belongs to the point set

    Records the measured (m, r, rho) as dataset attributes.
    """
    name = 'PlanCheck'

    def initialise(self):
        self.run_on_startup(True)
        self.points = self.get_resource('points')
        self.plan = self.get_resource('plan')

    def meas_sequence(self):
        detail = check_plan_compatible(self.plan,self.points)

        self.ds_results.attrs.update(measured_m=detail.m,
                                     measured_r=detail.r,
                                     measured_rho=detail.rho,
                                     min_gap=detail.min_gap)
        self.log(f'Plan matches point set, m = {detail.m:.6g}, r = {detail.r:.6g}')


class CascadeTrial(AbstractMeasurement):
    """
    One cascade trial per master seed

    Data variables: all_pairs_ok, failed_pairs, max_rel_error,
    max_additive_error_vs_bound, worst_i, worst_j and, with check_levels,
    level_error_ratio over the level coordinate.
    """
    name = 'CascadeTrial'

    def initialise(self):
        self.points = self.get_resource('points')
        self.plan = self.get_resource('plan')
        self.truth = self.get_resource('truth')
        self.direction_truth = self.get_resource('direction_truth')

        engine = self.config.get('engine',ENGINE_EXACT)
        assert engine in ENGINES, f'Trial engine must be one of {ENGINES} not [{engine}]'

    def level_inner_products(self,plan):
        if self.config.engine==ENGINE_GRAM:
            return simulate_level_inner_products(self.points,plan)

        if self.config.check_levels:
            levels = sketch_levels(self.points,plan,self.config)
        else:
            levels = [sketch_set(self.points,plan,self.config).words]

        dims = plan.dims[-len(levels):]
        return [inner_product_matrix(words,D) for words,D in zip(levels,dims)]

    def meas_sequence(self):
        seed = self.current_conditions['seed']
        plan = with_seed(self.plan,seed)

        inners = self.level_inner_products(plan)
        scores = score_trial(plan,self.points,inners[-1],self.truth,self.direction_truth)

        for name in TRIAL_FIELDS:
            self.store_data_var(name,scores[name])

        if self.config.check_levels and len(inners)==plan.ell and plan.delta is not None:
            self.store_coords('level',np.arange(1,plan.ell + 1))
            self.store_data_var('level_error_ratio',level_error_ratios(plan,self.points,inners),coords=['level'])

        self.log(f'Seed {seed}: pairs ok = {scores.all_pairs_ok}, max rel error = {scores.max_rel_error:.4g}')


class JlTrial(AbstractMeasurement):
    """
    JL baseline on the same seed, enabled by config include_jl
    """
    name = 'JlTrial'

    def initialise(self):
        self.enable = bool(self.config.get('include_jl',False))
        self.points = self.get_resource('points')
        self.truth = self.get_resource('truth')
        self.epsilon = self.get_resource('plan').epsilon
        self.min_dist = min_distance(self.points)

    def meas_sequence(self):
        seed = self.current_conditions['seed']
        sketch = jl_sketch(self.points,self.min_dist,self.epsilon,seed,self.config.coord_range)

        i,j = np.triu_indices(self.points.n,1)
        true = self.truth[i,j]
        rel = np.abs(jl_sq_dists(sketch)[i,j] - true)/true

        self.store_data_var('jl_all_pairs_ok',bool(np.all(rel<=self.epsilon)))
        self.store_data_var('jl_max_rel_error',float(rel.max()))
        self.store_data_var('jl_clamp_count',sketch.clamp_count)
        self.ds_results.attrs.update(jl_k=sketch.k,jl_bits=sketch.bits,jl_min_distance=self.min_dist)


class CascadeTrialSequence(AbstractTrialSequence):
    """
    Trials of one plan over a range of master seeds

    >>> seq = CascadeTrialSequence(resources,config=config)
    >>> seq.conditions.seed.values = [0,1,2]
    >>> seq.run()
    """
    name = 'CascadeTrials'

    def define_setup_conditions(self):
        self.add_setup_condition(SeedCondition,'seed')

    def define_measurements(self):
        self.add_measurement(PlanCheck)
        self.add_measurement(CascadeTrial)
        self.add_measurement(JlTrial)

    def pre_process(self):
        plan = self.get_resource('plan')
        for key,value in plan_information(plan).items():
            self.information[key] = value

    @with_results(coords=['seed'],data_vars=['all_pairs_ok'])
    def per_trial_frame(self):
        """
        One row per seed, sorted by seed
        """
        names = [name for name in TRIAL_FIELDS + JL_FIELDS if name in self.ds_results]
        df = self.ds_results[names].to_dataframe()[names].reset_index()
        df = df.sort_values('seed').reset_index(drop=True)

        for name in BOOL_FIELDS:
            if name in df:
                df[name] = df[name].astype(bool)
        for name in INT_FIELDS:
            if name in df:
                df[name] = df[name].astype(np.int64)
        df['seed'] = df['seed'].astype(np.uint64)
        return df

#================================================================
#%% Reports
#================================================================
def plan_information(plan):
    """Plan fields as dataset attributes, None values left out"""
    info = {key:value for key,value in dataclasses.asdict(plan).items() if value is not None}
    info['dims'] = list(plan.dims)
    info['N'] = plan.N
    info['bit_budget'] = plan.bit_budget
    info['target_rate'] = plan.target_rate
    return info


@dataclasses.dataclass
class TrialReport:
    """
    Outcome of run_trials

    per_trial has one row per seed: seed, all_pairs_ok, failed_pairs,
    max_rel_error, max_additive_error_vs_bound, worst_i, worst_j and the
    jl_* columns when the baseline ran.
    """
    plan: CascadePlan
    per_trial: pd.DataFrame
    confidence: float = 0.95
    rate_slack: float = 0.05
    engine: str = ENGINE_EXACT
    ds_results: xr.Dataset = None

    @property
    def trials(self):
        return len(self.per_trial)

    @property
    def success_rate_defined(self):
        return self.trials>0

    @property
    def successes(self):
        if not self.success_rate_defined:
            return 0
        return int(self.per_trial['all_pairs_ok'].sum())

    @property
    def success_rate(self):
        if not self.success_rate_defined:
            return float('nan')
        return self.successes/self.trials

    @property
    def target_rate(self):
        return self.plan.target_rate

    @property
    def lower_bound(self):
        return binomial_lower_bound(self.successes,self.trials,self.confidence)

    @property
    def accepted(self):
        return self.success_rate_defined and self.lower_bound >= self.target_rate - self.rate_slack

    @property
    def additive_ok(self):
        """Additive bound held for every pair of every successful trial"""
        if not self.success_rate_defined:
            return True
        ok = self.per_trial[self.per_trial['all_pairs_ok']]
        return bool(np.all(ok['max_additive_error_vs_bound'].to_numpy()<=1))

    @property
    def any_failure(self):
        return self.successes<self.trials

    @property
    def jl_included(self):
        return 'jl_all_pairs_ok' in self.per_trial

    @property
    def jl_successes(self):
        return int(self.per_trial['jl_all_pairs_ok'].sum()) if self.jl_included else 0

    @property
    def jl_target_rate(self):
        return 1 - 2/self.plan.n

    @property
    def jl_lower_bound(self):
        if not self.jl_included:
            return float('nan')
        return binomial_lower_bound(self.jl_successes,self.trials,self.confidence)

    @property
    def jl_accepted(self):
        return self.jl_included and self.jl_lower_bound >= self.jl_target_rate - self.rate_slack

    @property
    def level_error_ratios(self):
        """seed x level DataFrame, None without level checks"""
        if self.ds_results is None or 'level_error_ratio' not in self.ds_results:
            return None
        return self.ds_results['level_error_ratio'].to_pandas()

    def failures(self):
        """
        Reasons the acceptance checks fail, empty when they all pass
        """
        reasons = []
        if not self.success_rate_defined:
            reasons.append('No trials run, success rate undefined')
            return reasons

        if not self.accepted:
            reasons.append(f'Success lower bound {self.lower_bound:.4f} below target '
                           f'{self.target_rate:.4f} - {self.rate_slack}')
        if not self.additive_ok:
            reasons.append('Additive bound exceeded in a successful trial')
        if self.jl_included and not self.jl_accepted:
            reasons.append(f'JL lower bound {self.jl_lower_bound:.4f} below target '
                           f'{self.jl_target_rate:.4f} - {self.rate_slack}')
        return reasons

    def check(self):
        """
        Raises
        ------
        VerificationError
            listing every failed check
        """
        reasons = self.failures()
        if reasons:
            raise VerificationError('; '.join(reasons))

    def to_csv(self,filename=None):
        """Per trial table as CSV text, or written to filename"""
        if filename is None:
            return self.per_trial.to_csv(index=False)
        self.per_trial.to_csv(filename,index=False)

    def summary_table(self):
        """
        Per trial table followed by the totals, as text
        """
        trial_table = TablePrinter(['seed','pairs ok','failed','max rel err','add/bound'],
                                   formats=['%i','%s','%i','%.4g','%.4g'])
        for row in self.per_trial.itertuples():
            trial_table.addrow([int(row.seed),bool(row.all_pairs_ok),int(row.failed_pairs),
                                row.max_rel_error,row.max_additive_error_vs_bound],print_row=False)

        totals = TablePrinter(['trials','successes','rate','lower bound','target','accepted'],
                              formats=['%i','%i','%.4f','%.4f','%.4f','%s'])
        totals.addrow([self.trials,self.successes,self.success_rate,self.lower_bound,
                       self.target_rate,self.accepted],print_row=False)

        text = [trial_table.dump_string(),totals.dump_string()]

        if self.jl_included:
            jl = TablePrinter(['jl successes','jl rate','jl lower bound','jl target','jl accepted'],
                              formats=['%i','%.4f','%.4f','%.4f','%s'])
            jl.addrow([self.jl_successes,self.jl_successes/self.trials,self.jl_lower_bound,
                       self.jl_target_rate,self.jl_accepted],print_row=False)
            text.append(jl.dump_string())

        return '\n'.join(text)

#================================================================
#%% Trial runs
#================================================================
@config_verbosity
def run_trials(points,epsilon,trials,seed0,config=None):
    """
    Sketch and check a point set with master seeds seed0 .. seed0+trials-1

    Parameters
    ----------
    points : PointSet
    epsilon : float
    trials : int
        >= 0, zero gives an empty report with the success rate undefined
    seed0 : int
    config : dict like, optional
        engine, n_constant, target, n_scale, include_jl, check_levels,
        confidence, rate_slack, workers ...

    Returns
    -------
    TrialReport

    Raises
    ------
    PreconditionError
        before any trial runs
    RuntimeError
        a trial failed, carrying the traceback
    """
    config = merge_config(config)
    if trials<0:
        raise PreconditionError(f'Trial count must be >= 0 not [{trials}]')
    assert config.engine in ENGINES, f'Trial engine must be one of {ENGINES} not [{config.engine}]'

    plan = make_plan(points,epsilon,seed0,config)
    if float(config.n_scale)!=1.0:
        plan = scale_final_dimension(plan,float(config.n_scale))
        log(f'Final dimension scaled by {config.n_scale} to N = {plan.N}','brief')

    report_args = dict(confidence=float(config.confidence),rate_slack=float(config.rate_slack),
                       engine=config.engine)

    if trials==0:
        log('No trials requested, success rate undefined','brief')
        return TrialReport(plan,pd.DataFrame(columns=['seed'] + TRIAL_FIELDS),**report_args)

    check_seed(seed0 + trials - 1)

    resources = dict(points=points,
                     plan=plan,
                     truth=true_sq_dists(points),
                     direction_truth=direction_sq_dists(points))

    seq = CascadeTrialSequence(resources,config=config)
    seq.conditions.seed.values = list(range(seed0,seed0 + trials))

    log(f'Running {trials} trial(s), {config.engine} engine, l = {plan.ell}, N = {plan.N}','brief')
    if not seq.run():
        raise RuntimeError(f'Trial sequence failed\n{seq.last_error}')

    report = TrialReport(plan,seq.per_trial_frame(),ds_results=seq.ds_results,**report_args)
    log(f'Success rate {report.success_rate:.4f}, lower bound {report.lower_bound:.4f}, '
        f'target {report.target_rate:.4f}','brief')
    return report


def ablation(points,epsilon,trials,seed0,factor=0.25,config=None):
    """
    run_trials with the final dimension scaled by factor

    Undersized sketches must start failing for the guarantee to mean
    anything; see TrialReport.any_failure.
    """
    return run_trials(points,epsilon,trials,seed0,merge_config(config,n_scale=factor))


@dataclasses.dataclass(frozen=True)
class KernelTestResult:
    inner: float
    expected: float
    mean: float
    std_error: float
    z_score: float
    passed: bool
    trials: int
    D: int


def kernel_unbiasedness_test(inner,d,D,trials,seed,band_sigmas=4.0):
    """
    Check E<phi^D(x),phi^D(y)> = f(<x,y>) for one sign feature layer

    The pair is x = e_1, y = inner e_1 + sqrt(1-inner^2) e_2. Each trial
    sketches both with a fresh layer (master seed seed + t). Every sign
    agreement is Bernoulli((1+f)/2) so the standard error of the mean over
    all trials is sqrt((1-f^2)/(D trials)).

    Returns
    -------
    KernelTestResult
        passed when |z| <= band_sigmas
    """
    if not abs(inner)<1:
        raise PreconditionError(f'Inner product must be in (-1,1) not [{inner}]')
    if d<2 or D<1 or trials<1:
        raise PreconditionError(f'Need d >= 2, D >= 1 and trials >= 1 not ({d}, {D}, {trials})')
    check_seed(seed + trials - 1)

    X = np.zeros((2,d))
    X[0,0] = 1.0
    X[1,0] = inner
    X[1,1] = math.sqrt(1 - inner**2)

    samples = np.empty(trials)
    for t in range(trials):
        layer = CascadeLayer(1,d,D,seed + t)
        words = pack_bit_matrix(layer.project(X))
        samples[t] = inner_product(PackedSignVector(words[0],D),PackedSignVector(words[1],D))

    expected = f(inner)
    mean = float(samples.mean())
    std_error = math.sqrt((1 - expected**2)/(D*trials))
    z_score = (mean - expected)/std_error

    log(f'Kernel test inner = {inner}: mean {mean:.6f}, expected {expected:.6f}, z = {z_score:.3f}','brief')
    return KernelTestResult(float(inner),float(expected),mean,float(std_error),float(z_score),
                            bool(abs(z_score)<=band_sigmas),int(trials),int(D))

#================================================================
#%% Bit accounting
#================================================================
@config_verbosity
def bit_scaling_sweep(n,epsilon,m_values,config=None):
    """
    Exact bit counts of both sketches over a range of minimum distances

    Uses the parameter-only schedule with r = 2; r only shapes the early
    levels, N = D_l does not depend on it.

    Returns
    -------
    pandas.DataFrame
        one row per m
    """
    config = merge_config(config)
    coord_range = float(config.coord_range)
    rows = []

    for m in m_values:
        params = schedule(n,m,2.0,epsilon,n_constant=float(config.n_constant),target=config.target)
        N = params.dims[-1]
        k = jl_dimension(n,epsilon)
        per_coord = coordinate_bits(grid_step(m,epsilon,k),coord_range)

        rows.append(dict(m=m,
                         ell=params.ell,
                         N=N,
                         hsk_bits=n*N,
                         hsk_bits_per_point=N,
                         hsk_asymptotic=asymptotic_bits(n,m,epsilon),
                         jl_k=k,
                         jl_bits_per_coordinate=per_coord,
                         jl_bits=jl_bits(n,m,epsilon,coord_range),
                         jl_bits_per_point=k*per_coord,
                         jl_asymptotic=jl_asymptotic_bits(n,m,epsilon)))

    return pd.DataFrame(rows)


def fit_growth_exponents(sweep,epsilon,tolerance=GROWTH_TOLERANCE):
    """
    Fit the growth of both bit counts against their predicted forms

    * cascade: log(bits per point) against log(2^l), 2^l being log2(4/m)
      rounded up to a power of 2; predicted slope 2 log2(pi/sqrt2)
    * JL: bits per coordinate against log2(1/(m^2 eps)); predicted slope 1

    Returns
    -------
    ObjDict
        fitted and predicted slopes, relative deviations and a within
        tolerance flag for each; nan slopes when the sweep has fewer than
        two distinct values
    """
    def slope(x,y):
        if np.unique(x).size<2:
            return float('nan')
        return float(np.polyfit(x,y,1)[0])

    m = sweep['m'].to_numpy(dtype=float)

    hsk = slope(sweep['ell'].to_numpy(dtype=float)*math.log(2),
                np.log(sweep['hsk_bits_per_point'].to_numpy(dtype=float)))
    hsk_predicted = 2*math.log2(math.pi/math.sqrt(2))

    jl = slope(np.log2(1/(m**2*epsilon)),sweep['jl_bits_per_coordinate'].to_numpy(dtype=float))
    jl_predicted = 1.0

    hsk_dev = abs(hsk - hsk_predicted)/hsk_predicted
    jl_dev = abs(jl - jl_predicted)/jl_predicted

    return ObjDict(hsk_exponent=hsk,hsk_predicted=hsk_predicted,hsk_deviation=hsk_dev,
                   hsk_ok=bool(hsk_dev<=tolerance),
                   jl_exponent=jl,jl_predicted=jl_predicted,jl_deviation=jl_dev,
                   jl_ok=bool(jl_dev<=tolerance))


def compare_frame(report):
    """
    Side by side table of a trial report run with include_jl
    """
    plan = report.plan
    if not report.jl_included:
        raise PreconditionError('Report has no JL baseline results, run with include_jl')

    per_trial = report.per_trial
    attrs = report.ds_results.attrs

    rows = [dict(method='hypersketch',
                 bits_total=plan.bit_budget,
                 bits_asymptotic=asymptotic_bits(plan.n,plan.m,plan.epsilon),
                 max_rel_error=float(per_trial['max_rel_error'].max()),
                 success_rate=report.success_rate,
                 lower_bound=report.lower_bound,
                 target_rate=report.target_rate,
                 accepted=report.accepted),
            dict(method='jl',
                 bits_total=int(attrs['jl_bits']),
                 bits_asymptotic=jl_asymptotic_bits(plan.n,float(attrs['jl_min_distance']),plan.epsilon),
                 max_rel_error=float(per_trial['jl_max_rel_error'].max()),
                 success_rate=report.jl_successes/report.trials,
                 lower_bound=report.jl_lower_bound,
                 target_rate=report.jl_target_rate,
                 accepted=report.jl_accepted)]

    return pd.DataFrame(rows,columns=COMPARE_COLUMNS)


def compare_jl(points,epsilon,trials,seed0,config=None):
    """
    Run both sketches on the same seeds and tabulate them

    Returns
    -------
    pandas.DataFrame
        columns method, bits_total, bits_asymptotic, max_rel_error,
        success_rate, lower_bound, target_rate, accepted
    """
    if trials<1:
        raise PreconditionError(f'Comparison needs at least one trial not [{trials}]')
    config = merge_config(config,include_jl=True)
    report = run_trials(points,epsilon,trials,seed0,config)
    return compare_frame(report)
