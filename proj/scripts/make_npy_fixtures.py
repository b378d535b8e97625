"""Writes the NPY fixtures under tests/data with numpy itself."""
import io
import pathlib

import numpy as np

out = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"
out.mkdir(parents=True, exist_ok=True)

rng = np.random.default_rng(7)
np.save(out / "f8_2x3.npy", np.array([[0.0, -1.5, 2.25], [1e-300, 3.141592653589793, -0.0]]))
np.save(out / "f4_4.npy", np.array([0.5, -2.0, 1.0e6, 0.1], dtype="<f4"))
np.save(out / "i8_labels.npy", np.arange(10, dtype="<i8") % 3)
np.save(out / "i4_2x2.npy", np.array([[1, -2], [3, 2**31 - 1]], dtype="<i4"))
np.save(out / "u8_ones.npy", np.full((100, 28, 28), 255, dtype=np.uint8))
np.save(out / "u8_ramp.npy", np.arange(256, dtype=np.uint8).reshape(16, 16))
np.save(out / "f8_random.npy", rng.standard_normal((5, 7, 3)))
np.save(out / "fortran.npy", np.asfortranarray(np.arange(6, dtype="<f8").reshape(2, 3)))
np.save(out / "complex.npy", np.array([1 + 2j, 3 - 1j]))
np.save(out / "bigendian.npy", np.array([1.0, 2.0], dtype=">f8"))
np.save(out / "scalar0d.npy", np.float64(4.5))

buf = io.BytesIO()
np.lib.format.write_array(buf, np.array([[1.0, 2.0], [3.0, 4.0]]), version=(2, 0))
(out / "v2_f8.npy").write_bytes(buf.getvalue())

# Tiny MNIST-style pair for the CSV of expected values.
with open(out / "f8_random.txt", "w") as f:
    for v in np.load(out / "f8_random.npy").ravel():
        f.write(repr(float(v)) + "\n")
