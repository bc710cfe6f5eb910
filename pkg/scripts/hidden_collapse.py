"""Show how little an even-width TVSCM hidden layer can carry.

For even n the weight matrix has rank 2: every output unit sees only the sum
of the even-index inputs and the sum of the odd-index inputs.  On row-major
28x28 images those are the ink in even columns and in odd columns, so the
classifier head receives (at most) a function of two scalars.  The script
checks that numerically and reports how many distinct hidden values a batch
produces per sample.
"""

import numpy as np

from tvscm.nn import build_model
from tvscm.structmat import numerical_rank
from tvscm.train import init_parameters


def main():
    rng = np.random.default_rng(0)
    for n in (784, 187):
        model = init_parameters(build_model("tvscm", n, 10), 0)
        layer = model.layers[0]
        X = rng.random((256, n))
        H = layer.forward(X)
        distinct = max(len(np.unique(np.round(row, 9))) for row in H)
        even, odd = X[:, 0::2].sum(1), X[:, 1::2].sum(1)
        if n % 2 == 0:
            a, b = layer.a, layer.b
            pred_even = a * even + b * odd
            pred_odd = b * even + a * odd
            err = max(np.abs(H[:, 0::2] - pred_even[:, None]).max(),
                      np.abs(H[:, 1::2] - pred_odd[:, None]).max())
            note = f"matches (a*E + b*O, b*E + a*O) to {err:.1e}"
        else:
            note = "odd width: identity plus all-ones, full rank"
        print(f"n={n}: rank {numerical_rank(layer.op.sym)}, "
              f"at most {distinct} distinct hidden values per sample; {note}")


if __name__ == "__main__":
    main()
