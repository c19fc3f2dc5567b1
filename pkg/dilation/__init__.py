"""
Exact cascade solvers for the dilation equation on the line (M = 2) and on the
twin-dragon plane (M = 1 + i).
"""
__version__ = "1.0.0"
