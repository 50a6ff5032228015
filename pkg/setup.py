from setuptools import setup, find_packages
import codecs
import os

here = os.path.abspath(os.path.dirname(__file__))

with codecs.open(os.path.join(here, "README.md"), encoding="utf-8") as fh:
    long_description = "\n" + fh.read()

VERSION = "0.1.0"
DESCRIPTION = "Synthesise ground views from aerial images (and back) with conditional GANs"

# Setting up
setup(
    name="crossview",
    version=VERSION,
    description=DESCRIPTION,
    long_description_content_type="text/markdown",
    long_description=long_description,
    packages=find_packages(exclude=["tests"]),
    python_requires=">=3.9",
    install_requires=["numpy", "pandas", "matplotlib", "scipy", "torch>=2.0", "Pillow", "tqdm"],
    extras_require={"tests": ["pytest", "scikit-image"]},
    entry_points={"console_scripts": ["crossview=crossview.cli:main"]},
    keywords=["gan", "pix2pix", "cross-view", "image synthesis", "segmentation"],
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Operating System :: Unix",
        "Operating System :: MacOS :: MacOS X",
        "Operating System :: Microsoft :: Windows",
    ]
)
