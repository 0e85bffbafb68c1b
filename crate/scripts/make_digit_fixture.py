"""Build the bundled 28x28 digit set in IDX format.

Source images are the 8x8 handwritten digits shipped with scikit-learn
(UCI optdigits). Each image is upsampled to 20x20 with bilinear filtering,
rescaled to 0..255 and centred in a 28x28 frame, the same framing MNIST uses.
"""
import struct
import sys
from pathlib import Path

import numpy as np
from PIL import Image
from sklearn.datasets import load_digits

PER_DIGIT = 20


def main(out_dir: Path) -> None:
    digits = load_digits()
    images, labels = [], []
    for d in range(10):
        idx = np.flatnonzero(digits.target == d)[:PER_DIGIT]
        for i in idx:
            src = (digits.images[i] / 16.0 * 255.0).astype(np.uint8)
            up = Image.fromarray(src).resize((20, 20), Image.BILINEAR)
            frame = np.zeros((28, 28), dtype=np.uint8)
            frame[4:24, 4:24] = np.asarray(up)
            images.append(frame)
            labels.append(d)
    # interleave so labels are not sorted
    order = np.argsort([(k % PER_DIGIT) * 10 + lab for k, lab in enumerate(labels)], kind="stable")
    images = [images[k] for k in order]
    labels = [labels[k] for k in order]
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "digits-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for im in images:
            f.write(im.tobytes())
    with open(out_dir / "digits-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("crates/core/assets"))
