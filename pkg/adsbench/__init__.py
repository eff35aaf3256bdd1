import jax

# Rate and quantile kernels need double precision; must run before any array
# is created.
jax.config.update("jax_enable_x64", True)

__version__ = '0.1.0'
