from __future__ import annotations

import os
import sys
from fractions import Fraction

from hypothesis import settings, strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from lipval.circle_fn import PLFunction  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

rationals = st.fractions(min_value=-4, max_value=4, max_denominator=32)
unit_points = st.integers(min_value=0, max_value=127).map(lambda k: Fraction(k, 128))


@st.composite
def pl_functions(draw, max_nodes: int = 12):
    xs = draw(st.lists(unit_points, min_size=1, max_size=max_nodes, unique=True))
    vs = draw(st.lists(rationals, min_size=len(xs), max_size=len(xs)))
    return PLFunction.from_breakpoints(zip(sorted(xs), vs))
