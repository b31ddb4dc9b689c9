"""
RoadHawkes - traffic flow on road networks coupled to a self-exciting accident process
"""

__version__ = '1.0.0'
