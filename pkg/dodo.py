"""
Doit build file for the QKD image encryption pipeline.
"""

import os
import platform
import sys
from pathlib import Path

import chartbook

sys.path.insert(1, "./src/")

BASE_DIR = chartbook.env.get_project_root()
DATA_DIR = BASE_DIR / "_data"
OUTPUT_DIR = BASE_DIR / "_output"
DATASET_DIR = DATA_DIR / "images"
OS_TYPE = "nix" if platform.system() != "Windows" else "windows"

SAMPLE_IMAGES = ["checkerboard", "constant", "gradient", "noise", "phantom"]
CHARTS = [
    "entropy_comparison",
    "encryption_timings",
    "histogram_comparison",
    "noise_sweep",
]


## Helpers for handling Jupyter Notebook tasks
os.environ["PYDEVD_DISABLE_FILE_VALIDATION"] = "1"


# fmt: off
def jupyter_execute_notebook(notebook_path):
    return f"jupyter nbconvert --execute --to notebook --ClearMetadataPreprocessor.enabled=True --inplace {notebook_path}"
def jupyter_to_html(notebook_path, output_dir=OUTPUT_DIR):
    return f"jupyter nbconvert --to html --output-dir={output_dir} {notebook_path}"
# fmt: on


def mv(from_path, to_path):
    from_path = Path(from_path)
    to_path = Path(to_path)
    to_path.mkdir(parents=True, exist_ok=True)
    if OS_TYPE == "nix":
        command = f"mv {from_path} {to_path}"
    else:
        command = f"move {from_path} {to_path}"
    return command


def task_config():
    """Create directories for data and output."""
    def create_dirs():
        DATA_DIR.mkdir(parents=True, exist_ok=True)
        OUTPUT_DIR.mkdir(parents=True, exist_ok=True)
    return {
        "actions": [create_dirs],
        "targets": [DATA_DIR, OUTPUT_DIR],
        "verbosity": 2,
    }


def task_sample_data():
    """Write the synthetic grayscale dataset."""
    return {
        "actions": ["python src/create_sample_dataset.py"],
        "file_dep": ["src/create_sample_dataset.py", "src/image_io.py"],
        "targets": [DATASET_DIR / f"{name}.pgm" for name in SAMPLE_IMAGES],
        "verbosity": 2,
        "task_dep": ["config"],
    }


def task_keys():
    """Classical key, QKD key and their XOR combination for the notebook."""
    classical = DATA_DIR / "classical_key.json"
    quantum = DATA_DIR / "quantum_key.json"
    combined = DATA_DIR / "combined_key.json"
    # No eavesdropper here: a detected attack exits with status 3 and fails the task.
    return {
        "actions": [
            f"python src/cli.py keygen --bits 256 --seed 1 --out {classical}",
            f"python src/cli.py qkd --bits 256 --seed 2 --out {quantum}",
            f"python src/cli.py combine --key {classical} --key {quantum} --out {combined}",
        ],
        "file_dep": ["src/cli.py", "src/qkd_sim.py"],
        "targets": [classical, quantum, combined],
        "verbosity": 2,
        "task_dep": ["config"],
    }


def task_batch():
    """Encrypt, decrypt and score every image in the dataset."""
    return {
        "actions": ["python src/batch_report.py"],
        "file_dep": [
            "src/batch_report.py",
            "src/image_cipher.py",
            "src/chaos_maps.py",
            "src/qkd_sim.py",
            "src/analysis_metrics.py",
            *[DATASET_DIR / f"{name}.pgm" for name in SAMPLE_IMAGES],
        ],
        "targets": [
            DATA_DIR / "batch_report.json",
            DATA_DIR / "batch_report.json.txt",
            DATA_DIR / "batch_report.json.parquet",
        ],
        "verbosity": 2,
        "task_dep": ["sample_data"],
    }


def task_generate_charts():
    """Generate entropy, timing, histogram and noise-sweep charts."""
    return {
        "actions": ["python src/plot_figure.py"],
        "file_dep": [
            "src/plot_figure.py",
            DATA_DIR / "batch_report.json.parquet",
        ],
        "targets": [
            *[OUTPUT_DIR / f"{chart}.html" for chart in CHARTS],
            DATA_DIR / "noise_sweep.parquet",
        ],
        "verbosity": 2,
        "task_dep": ["batch"],
    }


notebook_tasks = {
    "summary_qkd_image_encryption_ipynb": {
        "path": "./src/summary_qkd_image_encryption_ipynb.py",
        "file_dep": [
            DATA_DIR / "batch_report.json.parquet",
            DATA_DIR / "noise_sweep.parquet",
            DATA_DIR / "combined_key.json",
        ],
        "targets": [],
    },
}
notebook_files = []
for notebook in notebook_tasks.keys():
    pyfile_path = Path(notebook_tasks[notebook]["path"])
    notebook_files.append(pyfile_path)


def task_run_notebooks():
    """Execute summary notebook and convert to HTML."""
    for notebook in notebook_tasks.keys():
        pyfile_path = Path(notebook_tasks[notebook]["path"])
        notebook_path = pyfile_path.with_suffix(".ipynb")
        yield {
            "name": notebook,
            "actions": [
                f"jupytext --to notebook --output {notebook_path} {pyfile_path}",
                jupyter_execute_notebook(notebook_path),
                jupyter_to_html(notebook_path),
                mv(notebook_path, OUTPUT_DIR),
            ],
            "file_dep": [
                pyfile_path,
                *notebook_tasks[notebook]["file_dep"],
            ],
            "targets": [
                OUTPUT_DIR / f"{notebook}.html",
                *notebook_tasks[notebook]["targets"],
            ],
            "clean": True,
            "task_dep": ["keys", "generate_charts"],
        }


def task_generate_pipeline_site():
    """Generate chartbook documentation site."""
    return {
        "actions": ["chartbook build -f"],
        "file_dep": [
            "chartbook.toml",
            *notebook_files,
            *[OUTPUT_DIR / f"{chart}.html" for chart in CHARTS],
        ],
        "targets": [BASE_DIR / "docs" / "index.html"],
        "verbosity": 2,
        "task_dep": ["run_notebooks", "generate_charts"],
    }
