"""Test utilities: gradient checking and the acceptance-verdict registry."""

import numpy as np
import torch

# Verdict lines recorded by the acceptance tests; conftest echoes them in a
# terminal-summary section, since pytest's fd-level capture would otherwise
# swallow prints from inside the tests.
ACCEPTANCE_VERDICTS: list[str] = []


def fd_gradcheck(loss_fn, inputs, rtol=1e-4, eps=1e-6, atol=1e-8):
    """Compare autograd gradients of loss_fn against central differences.

    loss_fn takes the tensors in `inputs` (all float64 leaves with
    requires_grad) and returns a scalar tensor.  Every element of every input
    is perturbed individually, so keep the inputs small.  Returns the worst
    relative error observed; raises AssertionError past rtol.
    """
    for x in inputs:
        if x.dtype != torch.float64:
            raise ValueError("finite differences need float64 inputs")
        if not x.requires_grad:
            raise ValueError("inputs must require grad")
        if x.grad is not None:
            x.grad = None

    loss = loss_fn(*inputs)
    grads = torch.autograd.grad(loss, inputs, allow_unused=True)

    worst = 0.0
    with torch.no_grad():
        for x, g in zip(inputs, grads):
            analytic = torch.zeros_like(x) if g is None else g
            flat = x.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + eps
                hi = float(loss_fn(*inputs).detach())
                flat[i] = orig - eps
                lo = float(loss_fn(*inputs).detach())
                flat[i] = orig
                numeric = (hi - lo) / (2 * eps)
                a = analytic.view(-1)[i].item()
                err = abs(a - numeric) / max(abs(a), abs(numeric), atol / rtol)
                worst = max(worst, err)
                assert err <= rtol, (
                    f"gradient mismatch at element {i}: analytic {a:.10g} "
                    f"vs numeric {numeric:.10g} (rel err {err:.3g} > {rtol})"
                )
    return worst


def deranged_perm(n, seed=0):
    """A fixed derangement for tests that need a reproducible pairing."""
    from corrkd.losses import random_derangement

    return random_derangement(n, np.random.default_rng(seed))
