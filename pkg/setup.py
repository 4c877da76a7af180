# Copyright 2022 Petuum, Inc. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


import os
import setuptools


if __name__ == "__main__":
    setuptools.setup(
        name="pctlib",
        version=os.getenv("PCTLIB_VERSION", "0.0.0"),
        author="Petuum Inc.",
        author_email="aurick.qiao@petuum.com",
        description="Parallel on-the-fly model checking for a CTL fragment",
        url="https://github.com/petuum/pctlib",
        classifiers=[
            "Programming Language :: Python :: 3",
            "License :: Other/Proprietary License",
            "Operating System :: POSIX :: Linux",
        ],
        packages=setuptools.find_packages(include=["pctlib", "pctlib.*"]),
        python_requires=">=3.8",
        install_requires=[
            "dacite>=1.6",
            "numpy>=1.21",
            "pandas>=1.3",
            "pyparsing>=3.1",
            "pyyaml>=6.0",
            "typeguard>=4.0",
            "xxhash>=3.0",
        ],
        extras_require={
            "test": ["pytest>=7.0"],
        },
        entry_points={
            "console_scripts": ["pctlcli = pctlib.cli:main"],
        },
    )
