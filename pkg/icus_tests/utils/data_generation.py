import numpy as np

from icus import rng as icus_rng
from icus.combinatorics.design import BernoulliDesign, sample_design
from icus.core.dataset import Dataset
from icus.core.kernels import get_kernel
from icus.core.laws import get_law


def gen_dataset(law_name='uniform3', n=8, seed=0, arity=1):
    return Dataset.from_law(get_law(law_name), n, seed=seed, arity=arity)


def gen_problem(law_name='uniform3', kernel_name='sample_variance', n=8, budget_N=10, seed=0, m=2):
    """Dataset, kernel and a sampled design drawn from the (seed, DATA) and (seed, DESIGN) streams"""
    kernel = get_kernel(kernel_name, m)
    data = Dataset.from_law(get_law(law_name), n, seed=seed, arity=kernel.arity)
    design = BernoulliDesign(n, kernel.degree, budget_N, seed=seed)
    return data, kernel, sample_design(design)


def gen_values(size, seed=0):
    return icus_rng.stream(seed, icus_rng.AUX).standard_normal(size)


def midpoint_normal_sample(reps):
    from scipy.special import ndtri
    return ndtri((np.arange(1, reps + 1) - 0.5) / reps)
