from setuptools import setup, find_packages

setup(
    name="qrflow",
    version="0.1.0",
    packages=find_packages(include=["qrflow", "qrflow.*"]),
    install_requires=["numpy", "scipy", "networkx", "pyyaml"],
    extras_require={"test": ["pytest", "hypothesis", "behave"]},
    entry_points={"console_scripts": ["qrflow = qrflow.cli:main"]},
)
