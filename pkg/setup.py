"""Build glue for the Rust parsing core.

The extension embeds tree-sitter and five language grammars behind a small
PyO3 facade. cargo produces a cdylib; build_ext renames it to the module
filename setuptools expects so both regular and editable installs work.
"""

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

CRATE_DIR = Path(__file__).parent / "native"
CRATE_LIB = "contextcov_native"


class CargoExtension(Extension):
    def __init__(self, name: str) -> None:
        super().__init__(name, sources=[])


class CargoBuildExt(build_ext):
    def build_extension(self, ext: Extension) -> None:
        if not isinstance(ext, CargoExtension):
            super().build_extension(ext)
            return
        subprocess.run(
            ["cargo", "build", "--release"],
            cwd=CRATE_DIR,
            check=True,
        )
        if sys.platform == "darwin":
            built = CRATE_DIR / "target" / "release" / f"lib{CRATE_LIB}.dylib"
        elif sys.platform.startswith("win"):
            built = CRATE_DIR / "target" / "release" / f"{CRATE_LIB}.dll"
        else:
            built = CRATE_DIR / "target" / "release" / f"lib{CRATE_LIB}.so"
        dest = Path(self.get_ext_fullpath(ext.name))
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(built, dest)


setup(
    ext_modules=[CargoExtension("contextcov._treesitter")],
    cmdclass={"build_ext": CargoBuildExt},
)
