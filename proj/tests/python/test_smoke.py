import json
import math

import numpy as np
import pytest

import resurf


def small_config(out_dir, iterations=2):
    cfg = json.loads(resurf.Config().to_json())
    cfg["output_dir"] = str(out_dir)
    cfg["scene"].update(image_size=24, cameras=4, focal=50.0)
    cfg["priors"]["resolution"] = 20
    cfg["fusion"]["resolution"] = 20
    cfg["gt_mesh_resolution"] = 24
    cfg["sampling"]["coarse_samples_per_ray"] = 32
    for key in ("sdf_encoding", "color_encoding"):
        cfg["field"][key].update(levels=4, table_size_log2=10)
    for key in ("sdf_decoder", "color_decoder"):
        cfg["field"][key].update(hidden_layers=1, width=16)
    cfg["train"].update(iterations=iterations, rays_per_batch=32, eikonal_points=64, eval_samples=1000)
    return resurf.Config.from_json(json.dumps(cfg))


def sphere_grid(res=33, radius=0.5):
    axis = np.linspace(-1.0, 1.0, res)
    z, y, x = np.meshgrid(axis, axis, axis, indexing="ij")
    values = np.sqrt(x * x + y * y + z * z) - radius
    return resurf.VoxelGrid(values, (-1.0, -1.0, -1.0), 2.0 / (res - 1))


def test_config_round_trip():
    cfg = resurf.Config()
    cfg.seed = 42
    cfg.fusion_mode = "average"
    assert resurf.Config.from_json(cfg.to_json()) == cfg
    with pytest.raises(resurf.ConfigError):
        resurf.Config.from_json('{"fusion": {"mode": "median"}}')


def test_fusion_picks_smallest_magnitude():
    assert resurf.fuse_values([0.3, -0.1, 0.2]) == -0.1
    assert resurf.fuse_values([0.3, -0.1, 0.2], "average") == pytest.approx(0.4 / 3)


def test_reserve_probability():
    # Area 2 is always kept; the others scale with beta and relative size.
    assert resurf.reserve_probability(2, (100, 100, 100)) == 1.0
    assert resurf.reserve_probability(1, (100, 100, 100)) == 1.0
    assert resurf.reserve_probability(1, (1000, 100, 400)) == pytest.approx(4.0 * 100 / 1000)
    assert resurf.reserve_probability(3, (100, 50, 400)) == pytest.approx(0.5 * 50 / 400)


def test_alpha_and_composite():
    expected = 1.0 / (1.0 + math.exp(-2.0)) - 1.0 / (1.0 + math.exp(-1.0))
    expected /= 1.0 / (1.0 + math.exp(-2.0))
    assert resurf.alpha_from_sdf(0.2, 0.1, 10.0) == pytest.approx(expected, abs=1e-12)
    color, t_final = resurf.composite([0.5, 0.5], [(1, 0, 0), (0, 1, 0)], (0, 0, 1))
    assert color == pytest.approx([0.5, 0.25, 0.25])
    assert t_final == pytest.approx(0.25)


def test_grid_lookup_and_marching_cubes():
    grid = sphere_grid()
    assert tuple(grid.resolution) == (33, 33, 33)
    assert grid.values.shape == (33, 33, 33)
    assert resurf.interpolate(grid, (0.5, 0.0, 0.0)) == pytest.approx(0.0, abs=1e-6)
    assert resurf.grid_gradient(grid, (0.5, 0.0, 0.0))[0] == pytest.approx(1.0, abs=0.05)
    vertices, faces = resurf.marching_cubes(grid)
    radii = np.linalg.norm(vertices, axis=1)
    assert np.all(np.abs(radii - 0.5) < math.sqrt(3) * grid.spacing)
    assert resurf.chamfer(vertices, faces, vertices, faces, 5000, 1) == 0.0
    bigger = resurf.marching_cubes(sphere_grid(radius=0.6))
    assert 0.05 <= resurf.chamfer(vertices, faces, *bigger, 5000, 1) <= 0.11
    with pytest.raises(resurf.EmptySurface):
        resurf.marching_cubes(sphere_grid(radius=5.0))


def test_grid_file_round_trip(tmp_path):
    grid = sphere_grid(9)
    grid.write(str(tmp_path / "g.sdfg"))
    back = resurf.VoxelGrid.read(str(tmp_path / "g.sdfg"))
    np.testing.assert_array_equal(back.values, grid.values)


def test_build_basis(tmp_path):
    result = resurf.build_basis(small_config(tmp_path))
    assert result["boundary_edges"] == 0
    assert len(result["faces"]) > 0
    assert sum(result["area_counts"]) == 19 ** 3  # one label per cell


def test_pipeline_commands(tmp_path):
    cfg = small_config(tmp_path / "run")
    code, log = resurf.run_command("run", cfg)
    assert code == 0, log
    assert (tmp_path / "run" / "mesh.ply").exists()
    code, log = resurf.run_command("eval", cfg)
    assert code == 0 and "chamfer distance" in log
    code, _ = resurf.run_command("nonsense", cfg)
    assert code == 2
