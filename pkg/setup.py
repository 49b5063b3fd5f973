#!/usr/bin/env python
import os
from setuptools import setup

try:
    README = open(os.path.join(os.path.dirname(__file__), 'README.md')).read()
except IOError:
    README = ''

setup(
    name='omnirate',
    version='0.1.0',
    description='Evaluate 360-degree video projection formats',
    long_description=README,
    long_description_content_type='text/markdown',
    license='GPL',
    packages=['omnirate', 'omnirate.tests'],
    python_requires='>=3.8',
    install_requires=['pyyaml', 'numpy', 'scipy', 'matplotlib'],
    entry_points={
        'console_scripts': [
            'omnirate = omnirate.commands:main'
        ]
    },
    test_suite='omnirate.tests',
    classifiers=[
        'License :: OSI Approved :: GNU General Public License v3 (GPLv3)'
    ]
)
