"""Internal unit system.

All quantities are dimensionless with hbar = 1 and m = 1.  Frequencies are
angular (rad per time unit).  The CLI attaches a unit label to its reports;
nothing in the numerics depends on it.
"""

HBAR = 1.0
MASS = 1.0
