"""Brown measures of R-diagonal operators."""
