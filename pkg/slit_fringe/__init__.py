__project_name__ = 'slit-fringe'
__version__ = '0.1.0'
