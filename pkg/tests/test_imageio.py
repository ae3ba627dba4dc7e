import numpy as np
import pytest
from hypothesis import given, strategies as st

from fishid.errors import (
    EmptyManifest,
    InconsistentHierarchy,
    MalformedRow,
    TruncatedData,
    UnsupportedFormat,
)
from fishid.imageio import (
    IndexedImage,
    ManifestEntry,
    RgbImage,
    decode_image,
    encode_bmp,
    encode_ppm,
    load_manifest,
    to_indexed,
    write_manifest,
)


def random_image(rng, max_side=20):
    w = int(rng.integers(1, max_side + 1))
    h = int(rng.integers(1, max_side + 1))
    return RgbImage(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))


class TestDecode:
    def test_ppm_literal(self):
        img = decode_image(b"P6 2 1 255 " + bytes([255, 0, 0, 0, 0, 255]))
        assert (img.width, img.height) == (2, 1)
        assert img.pixels[0, 0].tolist() == [255, 0, 0]
        assert img.pixels[0, 1].tolist() == [0, 0, 255]

    def test_ppm_comments(self):
        data = b"P6\n# a comment\n2 1\n# another\n255\n" + bytes(6)
        img = decode_image(data)
        assert (img.width, img.height) == (2, 1)

    def test_large_white_bmp(self):
        white = RgbImage(np.full((804, 856, 3), 255, dtype=np.uint8))
        img = decode_image(encode_bmp(white))
        assert (img.width, img.height) == (856, 804)
        assert img.same_as(white)

    def test_zero_dimension_rejected(self):
        with pytest.raises(UnsupportedFormat):
            decode_image(b"P6 0 0 255 ")

    def test_unknown_magic(self):
        with pytest.raises(UnsupportedFormat):
            decode_image(b"GIF89a....")

    def test_bad_maxval(self):
        with pytest.raises(UnsupportedFormat):
            decode_image(b"P6 1 1 65535 " + bytes(6))

    def test_truncated_ppm(self):
        with pytest.raises(TruncatedData):
            decode_image(b"P6 10 10 255 " + bytes(50))

    def test_truncated_bmp(self):
        data = encode_bmp(RgbImage(np.zeros((4, 4, 3), dtype=np.uint8)))
        with pytest.raises(TruncatedData):
            decode_image(data[:-8])

    def test_compressed_bmp_rejected(self):
        data = bytearray(encode_bmp(RgbImage(np.zeros((4, 4, 3), dtype=np.uint8))))
        data[30] = 1  # BI_RLE8
        with pytest.raises(UnsupportedFormat):
            decode_image(bytes(data))

    def test_wrong_bit_depth_rejected(self):
        data = bytearray(encode_bmp(RgbImage(np.zeros((4, 4, 3), dtype=np.uint8))))
        data[28] = 8
        with pytest.raises(UnsupportedFormat):
            decode_image(bytes(data))


class TestRoundTrip:
    def test_ppm_bit_exact_100_random_images(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            img = random_image(rng)
            assert decode_image(encode_ppm(img)).same_as(img)

    @pytest.mark.parametrize("w,h", [(1, 1), (3, 2), (5, 7), (8, 3)])
    def test_bmp_bit_exact_with_row_padding(self, w, h):
        rng = np.random.default_rng(w * 100 + h)
        img = RgbImage(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))
        assert decode_image(encode_bmp(img)).same_as(img)


class TestIndexed:
    def test_black_and_white_anchors(self):
        img = RgbImage(np.array([[[0, 0, 0], [255, 255, 255]]], dtype=np.uint8))
        assert to_indexed(img).index[0].tolist() == [0, 255]

    def test_pure_red(self):
        img = RgbImage(np.array([[[255, 0, 0]]], dtype=np.uint8))
        assert to_indexed(img).index[0, 0] == 76

    def test_midgray_fixed_point(self):
        img = RgbImage(np.array([[[128, 128, 128]]], dtype=np.uint8))
        assert to_indexed(img).index[0, 0] == 128

    @given(st.integers(0, 255))
    def test_every_gray_maps_to_itself(self, v):
        img = RgbImage(np.full((1, 1, 3), v, dtype=np.uint8))
        assert to_indexed(img).index[0, 0] == v

    def test_dimensions_preserved(self):
        rng = np.random.default_rng(0)
        img = random_image(rng)
        idx = to_indexed(img)
        assert (idx.width, idx.height) == (img.width, img.height)
        assert isinstance(idx, IndexedImage)


class TestManifest:
    def test_single_row(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text(
            "path,family,poison,cluster,split\n"
            "imgs/a.ppm,Istiophoridae,0,billfish,train\n"
        )
        entries = load_manifest(p)
        assert entries == [
            ManifestEntry("imgs/a.ppm", "Istiophoridae", False, "billfish", "train")
        ]

    def test_inconsistent_hierarchy(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text(
            "path,family,poison,cluster,split\n"
            "a.ppm,X,0,c1,train\n"
            "b.ppm,X,1,c1,test\n"
        )
        with pytest.raises(InconsistentHierarchy):
            load_manifest(p)

    def test_header_only(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("path,family,poison,cluster,split\n")
        with pytest.raises(EmptyManifest):
            load_manifest(p)

    @pytest.mark.parametrize(
        "row",
        [
            "a.ppm,X,2,c,train",  # bad poison flag
            "a.ppm,X,0,c,validation",  # bad split
            "a.ppm,X,0,c",  # wrong column count
            "a.ppm,,0,c,train",  # empty family
            ",X,0,c,train",  # empty path
        ],
    )
    def test_malformed_rows(self, tmp_path, row):
        p = tmp_path / "m.csv"
        p.write_text(f"path,family,poison,cluster,split\n{row}\n")
        with pytest.raises(MalformedRow):
            load_manifest(p)

    def test_wrong_header(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("file,family,poison,cluster,split\n")
        with pytest.raises(MalformedRow):
            load_manifest(p)

    def test_round_trip(self, tmp_path):
        entries = [
            ManifestEntry("a.ppm", "X", False, "c1", "train"),
            ManifestEntry("b.ppm", "Y", True, "c2", "test"),
        ]
        p = tmp_path / "m.csv"
        write_manifest(p, entries)
        assert load_manifest(p) == entries

    def test_accepts_default_corpus_layout(self, tmp_path):
        # 7 families whose train rows sum to 100
        counts = {
            "Istiophoridae": 15, "leiognathidae": 10, "Acropomaatidae": 15,
            "Scombridae": 10, "Stromateidae": 15, "Triacanthidae": 10,
            "Poison fish": 25,
        }
        rows = ["path,family,poison,cluster,split"]
        for fam, n in counts.items():
            poison = int(fam == "Poison fish")
            for k in range(n):
                rows.append(f"{fam}_{k}.ppm,{fam},{poison},c,train")
        p = tmp_path / "m.csv"
        p.write_text("\n".join(rows) + "\n")
        entries = load_manifest(p)
        assert len({e.family for e in entries}) == 7
        assert sum(e.split == "train" for e in entries) == 100
