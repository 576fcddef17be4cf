import os
from setuptools import setup, find_packages

version = open('VERSION').read().rstrip()

install_requires = [
    'docopt',
    'joblib',
    'numpy',
    'pandas',
    'psutil',
    'scikit-learn',
    'scipy',
    'ujson',
    ]

tests_require = [
    'pytest',
    'pytest-cov',
    ]

docs_require = [
    'Sphinx',
    'sphinx_rtd_theme',
    ]

here = os.path.abspath(os.path.dirname(__file__))
try:
    README = open(os.path.join(here, 'README.rst'), encoding='utf-8').read()
    CHANGES = open(os.path.join(here, 'CHANGES.txt'), encoding='utf-8').read()
except IOError:
    README = CHANGES = ''


setup(name='frameopt',
      version=version,
      description='Gradient-based optimization of truss and frame '
                  'structures with categorical and continuous design '
                  'variables',
      long_description=README,
      license='Apache License, Version 2.0',
      classifiers=[
          'Development Status :: 3 - Alpha',
          'Intended Audience :: Science/Research',
          'License :: OSI Approved :: Apache Software License',
          'Programming Language :: Python :: 3.8',
          'Programming Language :: Python :: 3.9',
          'Programming Language :: Python :: 3.10',
          'Topic :: Scientific/Engineering',
      ],
      packages=find_packages(exclude=['examples', 'examples.*']),
      include_package_data=True,
      zip_safe=False,
      install_requires=install_requires,
      extras_require={
          'testing': tests_require,
          'docs': docs_require,
          },
      entry_points={
          'console_scripts': [
              'frameopt = frameopt.bench:frameopt_cmd',
              ],
          'pytest11': [
              'frameopt = frameopt.tests',
              ],
          },
      )
