import subprocess
import sys


SCRIPT = r"""
import numpy as np
from vesselcast.engine import Rng, Tape, backward, conv2d, layer_norm, matmul, softmax, tensor, tsum
from vesselcast.hashutil import fnv1a64

rng = Rng(2024)
def rand(shape, lo=-1.0, hi=1.0):
    return np.array(rng.uniforms(int(np.prod(shape)), lo, hi)).reshape(shape)

w1 = tensor(rand((6, 8)), requires_grad=True)
w2 = tensor(rand((8, 4)), requires_grad=True)
k = tensor(rand((2, 1, 3, 3)), requires_grad=True)
gain = tensor(rand((4,), 0.5, 1.5), requires_grad=True)
bias = tensor(rand((4,)), requires_grad=True)
x = tensor(rand((5, 6)))
img = tensor(rand((1, 7, 7)))

with Tape():
    h = softmax(matmul(x, w1), axis=-1)
    y = layer_norm(matmul(h, w2), gain, bias)
    conv = conv2d(img, k, stride=2, padding=1)
    loss = tsum(y * y) + tsum(conv * 0.3)
    backward(loss)

buf = loss.data.tobytes() + y.data.tobytes() + conv.data.tobytes()
for t in (w1, w2, k, gain, bias):
    buf += t.grad.tobytes()
print(fnv1a64(buf))
"""


def test_tape_replay_bit_identical_across_processes():
    outs = []
    for _ in range(2):
        proc = subprocess.run([sys.executable, "-c", SCRIPT], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(proc.stdout.strip())
    assert outs[0] == outs[1]
