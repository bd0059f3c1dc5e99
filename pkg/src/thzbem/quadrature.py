"""Quadrature rules for panel integration.

Two families are used by the assembler: plain Gauss-Legendre on [0, 1]
for smooth integrands, and a generalized Gauss rule for the weight
-ln(x) on (0, 1) that integrates the logarithmic kernel part exactly
against polynomials.  The log-rule nodes/weights were generated offline
with a 60-digit Chebyshev/Golub-Welsch procedure from the exact moments
int_0^1 x^j (-ln x) dx = 1/(j+1)^2.
"""

import numpy as np

GAUSS_ORDER = 8  # default smooth order; doubled for the self-check gate

# (node, weight) pairs for weight -ln(x) on (0,1), 8 and 16 points
_LOG_RULE_8 = (
    (0.01332024416089246501225, 0.1644166047280028868315),
    (0.07975042901389493840983, 0.2375256100233060205013),
    (0.1978710293261880537945, 0.2268419844319191263688),
    (0.3541539943519094196715, 0.1757540790060702449881),
    (0.5294585752349172777061, 0.112924030246759051855),
    (0.7018145299390999638372, 0.05787221071778207239853),
    (0.8493793204411066760483, 0.02097907374213297804346),
    (0.9533264500563597887674, 0.003686407104027619013352),
)
_LOG_RULE_16 = (
    (0.003897834487115915924054, 0.06079171004359123285117),
    (0.02302894561687323982032, 0.1029156775175821443877),
    (0.05828039830624041234835, 0.1223556620460091935575),
    (0.1086783650910540364877, 0.127569246937015988717),
    (0.1726094549098439377608, 0.1230135746000709154231),
    (0.2479370544705784951477, 0.1118472448554857226218),
    (0.3320945491299171559848, 0.09659638515212434125297),
    (0.4221839105819486001151, 0.07935666435147313878244),
    (0.5150824733814626034763, 0.06185049458196520709514),
    (0.6075561204477287240864, 0.04543524650772666862883),
    (0.6963756532282140611563, 0.03109897475158180640925),
    (0.7784325658732654052039, 0.01945976592736084207809),
    (0.8508502697153910832338, 0.01077625496320552564554),
    (0.9110868572222719054188, 0.004972542890087641712505),
    (0.9570255717035421575915, 0.001678201110051194515035),
    (0.9870478002479844767587, 0.0002823537646684363217781),
)


def gauss_rule(order: int):
    """Gauss-Legendre nodes/weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def log_rule(order: int):
    """Nodes/weights for int_0^1 f(x) (-ln x) dx with f smooth.

    Only the orders 8 and 16 used by the assembler are provided.
    """
    if order == 8:
        table = _LOG_RULE_8
    elif order == 16:
        table = _LOG_RULE_16
    else:
        raise ValueError(f"log rule only tabulated for orders 8 and 16, got {order}")
    arr = np.asarray(table)
    return arr[:, 0].copy(), arr[:, 1].copy()
