import pytest

from stripegs.geometry import deform_good_region, running_example, slice_good_region, tile_partition
from stripegs.kernel import ModelParams
from stripegs.oracle import exhaustive_2d
from stripegs.plotting import (
    constants_figure,
    decomposition_figure,
    energy_curve_figure,
    search_figure,
    sliced_region_figure,
    width_scan_figure,
)
from stripegs.samples import rng_for, stripes_in_window
from stripegs.stripes import energy_curve, width_scan
from stripegs.suites import ConstantsFit

P = ModelParams.from_tau(-0.6, 5.0)


def figures():
    fit = ConstantsFit(P.to_dict(), 2, [{"ell": e, "C3": 0.5, "C2": 0.3, "c1": 0.1, "c2": 0.05} for e in (16, 24)],
                       {"C3": 1.0, "C2": 1.0, "c1": 1.0, "c2": 1.0})
    return {
        "curve": (energy_curve_figure, energy_curve(P, 10)),
        "uniform": (energy_curve_figure, energy_curve(ModelParams.from_tau(0.2, 5.0), 5)),
        "scan": (width_scan_figure, width_scan([-0.1, -0.01, -0.001])),
        "tiles": (decomposition_figure, tile_partition(stripes_in_window(rng_for(0), 10, 2), 10)),
        "sliced": (sliced_region_figure, slice_good_region(deform_good_region(running_example()))),
        "search": (search_figure, exhaustive_2d(4, 4, ModelParams(2, 5.0, 1.5))),
        "fit": (constants_figure, fit),
    }


@pytest.mark.parametrize("name", list(figures()))
def test_figures_write_png(name, tmp_path):
    fn, obj = figures()[name]
    out = fn(obj, tmp_path / "sub" / f"{name}.png")
    assert out.exists() and out.read_bytes()[:4] == b"\x89PNG"


@pytest.mark.parametrize("ext", [".svg", ".pdf"])
def test_vector_figures_are_reproducible(ext, tmp_path):
    fn, obj = figures()["tiles"]
    a = fn(obj, tmp_path / f"a{ext}").read_bytes()
    b = fn(obj, tmp_path / f"b{ext}").read_bytes()
    assert a == b
