"""Random workflow builders shared by the property and acceptance tests."""

import random

from ci_porter.model import Job, Matrix, Step, VersionLiteral, Workflow

# trailing-zero literals first; the rest are ordinary scalars YAML would also mangle or keep
HAZARDS = ("3.10", "1.20", "2.0", "3.0", "11.0", "0.10", "1.100")
PLAIN = ("3.8", "3.9", "18", "20", "pypy-3.10", "3.11.4", "latest", "ubuntu-latest", "1.2.3")
AXES = ("python-version", "node-version", "os", "go", "ruby")


def random_version(rng: random.Random) -> VersionLiteral:
    raw = rng.choice(HAZARDS if rng.random() < 0.5 else PLAIN)
    return VersionLiteral(raw, quoted=rng.random() < 0.3)


def random_workflow(rng: random.Random) -> Workflow:
    """A workflow with 1-3 jobs, each with a matrix holding at least one trailing-zero literal."""
    jobs = {}
    for j in range(rng.randint(1, 3)):
        names = rng.sample(AXES, rng.randint(1, 3))
        axes = {}
        for name in names:
            values = [random_version(rng) for _ in range(rng.randint(1, 4))]
            axes[name] = tuple(values)
        first = names[0]
        axes[first] = axes[first] + (VersionLiteral(rng.choice(HAZARDS)),)
        steps = [Step.uses("actions/checkout@v4")]
        steps += [Step.run(f"echo ${{{{ matrix.{n} }}}}") for n in names]
        needs = (f"job{j - 1}",) if j and rng.random() < 0.5 else ()
        jobs[f"job{j}"] = Job(strategy_matrix=Matrix(axes=axes, fail_fast=rng.choice([None, False, True])),
                              needs=needs, steps=tuple(steps))
    triggers = {t: None for t in rng.sample(["push", "pull_request", "workflow_dispatch"], rng.randint(1, 3))}
    return Workflow(name=rng.choice([None, "CI"]), triggers=triggers, jobs=jobs)


def raw_texts(workflow: Workflow) -> dict:
    return {(jn, axis): [v.raw_text for v in values]
            for jn, job in workflow.jobs.items()
            for axis, values in job.strategy_matrix.axes.items()}
