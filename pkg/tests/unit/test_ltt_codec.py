import os
import shutil
import struct
import tempfile
import unittest

import numpy as np

from services.errors import LTTFormatError
from services.ltt_codec import MAGIC, decode, encode, read_tensor, write_tensor


class TestLTTCodec(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.test_dir, ignore_errors=True)

    def test_byte_layout(self):
        payload = encode(np.array([1.5]))
        expected = b"LWLT" + struct.pack("<I", 1) + struct.pack("<I", 1) + struct.pack("<d", 1.5)
        self.assertEqual(payload, expected)

    def test_row_major_payload(self):
        array = np.arange(6.0).reshape(2, 3)
        payload = encode(array)
        values = struct.unpack("<6d", payload[len(MAGIC) + 12:])
        self.assertEqual(values, (0.0, 1.0, 2.0, 3.0, 4.0, 5.0))
        np.testing.assert_array_equal(decode(payload), array)

    def test_bad_magic(self):
        payload = b"XXXX" + encode(np.ones(2))[4:]
        with self.assertRaises(LTTFormatError):
            decode(payload)

    def test_truncated(self):
        payload = encode(np.ones((2, 2)))
        with self.assertRaises(LTTFormatError):
            decode(payload[:-3])
        with self.assertRaises(LTTFormatError):
            decode(payload[:6])

    def test_trailing_bytes(self):
        with self.assertRaises(LTTFormatError):
            decode(encode(np.ones(2)) + b"\x00")

    def test_zero_dimension(self):
        payload = MAGIC + struct.pack("<II", 1, 0)
        with self.assertRaises(LTTFormatError):
            decode(payload)

    def test_file_round_trip(self):
        path = os.path.join(self.test_dir, "tau.ltt")
        array = np.random.default_rng(0).standard_normal((3, 3, 2, 4))
        write_tensor(path, array)
        np.testing.assert_array_equal(read_tensor(path), array)

    def test_read_names_the_file(self):
        path = os.path.join(self.test_dir, "broken.ltt")
        with open(path, "wb") as f:
            f.write(b"nope")
        with self.assertRaises(LTTFormatError) as ctx:
            read_tensor(path)
        self.assertIn("broken.ltt", str(ctx.exception))


if __name__ == '__main__':
    unittest.main()
