"""The numpy network stack: forward, exact backprop, double backprop.

Verifies the hand-written gradients against finite differences, including
the forward-over-reverse pass behind the discriminator's input-gradient
penalty, then fits a small regression with the Adam implementation.
"""

import numpy as np

from csi import nets

rng = np.random.default_rng(0)

# --- gradient check against finite differences ------------------------------
spec = nets.NetworkSpec((5, 8, 3), hidden_activation="tanh", seed=1)
params = nets.init_params(spec)
x = rng.normal(size=(4, 5))
r = rng.normal(size=(4, 3))

y, cache = nets.forward(params, x)
grads, _ = nets.backward(params, cache, r)

eps = 1e-5
w = params.weights[0]
k = (2, 3)
orig = w[k]
w[k] = orig + eps
hi = float(np.sum(nets.forward(params, x)[0] * r))
w[k] = orig - eps
lo = float(np.sum(nets.forward(params, x)[0] * r))
w[k] = orig
fd = (hi - lo) / (2 * eps)
print(f"analytic dL/dWptr = {grads.weights[0][k]: .8f}")
print(f"finite-difference = {fd: .8f}")
print(f"relative error    = {abs(grads.weights[0][k] - fd) / abs(fd):.2e}")

# --- double backprop for the input-gradient penalty --------------------------
dspec = nets.NetworkSpec((4, 8, 1), hidden_activation="tanh",
                         output_activation="sigmoid", seed=2)
dparams = nets.init_params(dspec)
xs = rng.normal(size=(3, 4))
penalty, pgrads = nets.grad_penalty_param_grads(dparams, xs)
print(f"\npenalty ||grad_x D||^2 (batch mean) = {penalty:.6f}")

b = dparams.biases[0]
orig = b[1]
b[1] = orig + eps
hi, _ = nets.grad_penalty_param_grads(dparams, xs)
b[1] = orig - eps
lo, _ = nets.grad_penalty_param_grads(dparams, xs)
b[1] = orig
fd = (hi - lo) / (2 * eps)
print(f"d penalty / d bias[1]: analytic {pgrads.biases[0][1]: .8f}, fd {fd: .8f}")

# closed form: single sigmoid layer, w=(1,0), x=(0,0) -> penalty = 0.25^2
tiny = nets.init_params(nets.NetworkSpec((2, 1), output_activation="sigmoid"))
tiny.weights[0][:, 0] = [1.0, 0.0]
tiny.biases[0][:] = 0.0
val, _ = nets.grad_penalty_param_grads(tiny, np.zeros(2))
print(f"closed-form check: {val:.6f} (expected 0.0625)")

# --- Adam on a toy regression -------------------------------------------------
target_w = rng.normal(size=(6, 1))
xs = rng.normal(size=(256, 6))
ys = xs @ target_w

model = nets.init_params(nets.NetworkSpec((6, 16, 1), hidden_activation="tanh", seed=3))
opt = nets.adam_init(model.arrays(), lr=1e-2)
for step in range(400):
    pred, cache = nets.forward(model, xs)
    err = pred - ys
    grads, _ = nets.backward(model, cache, 2 * err / len(xs))
    nets.adam_step(model.arrays(), grads.arrays(), opt)
    if step % 100 == 0 or step == 399:
        print(f"step {step:3d}  mse {float(np.mean(err ** 2)):.6f}")
