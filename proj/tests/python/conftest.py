import importlib.util
import os
import sys

# Under ctest, load the package staged by the CMake build, bypassing any installed (or editable) copy.
_stage = os.environ.get("LEAKLAB_PYTHON_PATH")
if _stage:
    for name in [m for m in sys.modules if m == "leaklab" or m.startswith("leaklab.")]:
        del sys.modules[name]
    _pkg = os.path.join(_stage, "leaklab")
    _spec = importlib.util.spec_from_file_location(
        "leaklab", os.path.join(_pkg, "__init__.py"), submodule_search_locations=[_pkg]
    )
    _module = importlib.util.module_from_spec(_spec)
    sys.modules["leaklab"] = _module
    _spec.loader.exec_module(_module)
