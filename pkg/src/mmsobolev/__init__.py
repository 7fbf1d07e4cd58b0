"""Variational tools for metric Sobolev theory on finite metric-measure spaces."""
