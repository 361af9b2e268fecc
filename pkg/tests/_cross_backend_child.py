"""Helper: recompute a product under whatever backend the caller put in the
environment, so the parent test can compare kernel outputs bit for bit."""

import sys

import numpy as np


def main(in_path, out_path):
    from ddschur.ddmatrix import DDMatrix
    from ddschur.matmul import matmul_hp, matmul_lp

    data = np.load(in_path)
    a = DDMatrix(data["arh"], data["arl"], data["aih"], data["ail"])
    b = DDMatrix(data["brh"], data["brl"], data["bih"], data["bil"])
    c = matmul_hp(a, b)
    clp = matmul_lp(data["alp"], data["blp"])
    np.savez(
        out_path,
        crh=c.re_hi, crl=c.re_lo, cih=c.im_hi, cil=c.im_lo,
        clp=clp,
    )


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
