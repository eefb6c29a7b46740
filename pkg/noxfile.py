from contextlib import contextmanager
import os
import tempfile

import nox

# Black stays out of the default sessions so that formatting is an explicit step
nox.options.sessions = "lint", "safety", "tests"
code_locations = "bridge_diffusion", "test", "noxfile.py"
python_versions = ["3.8", "3.9", "3.10"]
lint_plugins = (
    "flake8-bandit",
    "flake8-black",
    "flake8-broken-line",
    "flake8-bugbear",
    "flake8-builtins",
    "flake8-commas",
    "flake8-comprehensions",
    "flake8-import-order",
    "flake8-logging-format",
    "pep8-naming",
)


@contextmanager
def exported_requirements(session):
    """
    Pinned requirements exported from the poetry lock file. The file is removed by
    hand because deleting on close fails with a PermissionError on Windows.
    """
    requirements = tempfile.NamedTemporaryFile(suffix=".txt", delete=False)
    requirements.close()
    session.run(
        "poetry",
        "export",
        "--dev",
        "--format=requirements.txt",
        "--without-hashes",
        f"--output={requirements.name}",
        external=True,
    )
    try:
        yield requirements.name
    finally:
        try:
            os.unlink(requirements.name)
        except OSError:
            session.log(f"Could not remove {requirements.name}")


def install_with_constraints(session, *args, **kwargs):
    with exported_requirements(session) as requirements:
        session.install(f"--constraint={requirements}", *args, **kwargs)


@nox.session(reuse_venv=True)
def black(session):
    args = session.posargs or code_locations

    install_with_constraints(session, "black")
    session.run("black", *args, external=True)


@nox.session(reuse_venv=True)
def lint(session):
    args = session.posargs or code_locations
    install_with_constraints(session, "flake8", *lint_plugins)
    session.run("flake8", *args)


@nox.session(reuse_venv=True)
def safety(session):
    install_with_constraints(session, "safety")
    with exported_requirements(session) as requirements:
        session.run("safety", "check", f"--file={requirements}", "--full-report")


@nox.session(python=python_versions, reuse_venv=True)
def tests(session):
    # Monte-Carlo verification runs take minutes and are left to `tests_full`
    args = session.posargs or ["--cov", "-m", "not slow"]
    # Not using `poetry run` as it errors on Windows OS when a version with the '<'
    # sign is specified for a package
    session.run("poetry", "install", external=True)
    session.run("pytest", *args)


@nox.session(python=python_versions[-1], reuse_venv=True)
def tests_full(session):
    session.run("poetry", "install", external=True)
    session.run("pytest", "--cov", *session.posargs)


@nox.session(python=python_versions[-1], reuse_venv=True)
def acceptance(session):
    """Runs the command line tool end to end with the default seeds"""
    session.run("poetry", "install", external=True)
    out_dir = session.create_tmp()
    session.run("bridge-diffusion", "analyze", "--compare", "--grid", "--out", out_dir)
    session.run("bridge-diffusion", "verify", "--out", out_dir)
    session.run("bridge-diffusion", "mismatch", "--synthetic", "10", "--out", out_dir)
    session.run(
        "bridge-diffusion", "enhance-oracle", "--t-rs", "0.5", "--out", out_dir,
    )
