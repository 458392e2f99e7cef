__version__ = "0.3.0"

__title__ = "subsketch"
__description__ = "Adaptive right-sketching for ridge-regularized convex programs, with recovery certificates."
__url__ = "https://github.com/subsketch/subsketch"
__uri__ = __url__
__doc__ = __description__ + " <" + __url__ + ">"

__author__ = "The subsketch developers"
__email__ = "subsketch@users.noreply.github.com"

__license__ = "MIT"
__copyright__ = "Copyright (c) 2026 " + __author__
