"""Numerical checks of Ricci-curvature lower bounds for Yamabe constants."""
