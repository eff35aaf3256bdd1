from setuptools import setup, find_packages

setup(
    name='adsbench',
    version='0.1.0',
    author='adsbench developers',
    description='Crash rates of a rider-only driving fleet against human '
    'driving benchmarks',
    packages=find_packages(exclude=['tests']),
    package_data={'adsbench': ['data/*']},
    install_requires=['jax', 'numpy', 'pandas', 'pyyaml', 'tabulate'],
    extras_require={'test': ['pytest', 'jax_cosmo']},
    entry_points={'console_scripts': ['adsbench=adsbench.cli:main']},
)
