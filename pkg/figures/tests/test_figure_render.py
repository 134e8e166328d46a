"""Rendering: every kind draws, re-draws byte-identically, and rejects
artifacts that do not match its schema."""

import hashlib
import json
import subprocess

import pytest

from latsurf_figures import FigureRecipe, SchemaMismatch, render


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _render_twice(kind, inputs, tmp_path, ext=".png"):
    outs = []
    for name in ("first", "second"):
        recipe = FigureRecipe(kind=kind, inputs=inputs,
                              output=str(tmp_path / (name + ext)))
        render(recipe)
        outs.append(tmp_path / (name + ext))
    assert outs[0].stat().st_size > 0
    return _sha(outs[0]), _sha(outs[1])


def test_decay_png_deterministic(artifact_dir, tmp_path):
    first, second = _render_twice("decay", (artifact_dir / "decay.csv",),
                                  tmp_path)
    assert first == second


def test_decay_svg_deterministic_and_undated(artifact_dir, tmp_path):
    first, second = _render_twice("decay", (artifact_dir / "decay.csv",),
                                  tmp_path, ext=".svg")
    assert first == second
    svg = (tmp_path / "first.svg").read_text()
    assert svg.lstrip().startswith("<?xml")
    assert "dc:date" not in svg


def test_sweep_overlays_multiple_series(artifact_dir, tmp_path):
    first, second = _render_twice(
        "sweep",
        (artifact_dir / "sweep_one.csv", artifact_dir / "sweep_two.csv"),
        tmp_path)
    assert first == second


def test_surface3d_deterministic(artifact_dir, tmp_path):
    first, second = _render_twice(
        "surface3d", (artifact_dir / "mesh.npz", artifact_dir / "gamma.json"),
        tmp_path)
    assert first == second


def test_surface3d_input_order_is_irrelevant(artifact_dir, tmp_path):
    a = FigureRecipe(kind="surface3d",
                     inputs=(artifact_dir / "mesh.npz",
                             artifact_dir / "gamma.json"),
                     output=str(tmp_path / "ab.png"))
    b = FigureRecipe(kind="surface3d",
                     inputs=(artifact_dir / "gamma.json",
                             artifact_dir / "mesh.npz"),
                     output=str(tmp_path / "ba.png"))
    render(a)
    render(b)
    assert _sha(tmp_path / "ab.png") == _sha(tmp_path / "ba.png")


def test_heatmap_deterministic(artifact_dir, tmp_path):
    first, second = _render_twice("dyadic-heatmap",
                                  (artifact_dir / "diag.csv",), tmp_path)
    assert first == second


def test_render_does_not_mutate_inputs(artifact_dir, tmp_path):
    names = ("decay.csv", "sweep_one.csv", "sweep_two.csv", "diag.csv",
             "mesh.npz", "gamma.json")
    before = {n: _sha(artifact_dir / n) for n in names}
    for kind, inputs in (
            ("decay", ("decay.csv",)),
            ("sweep", ("sweep_one.csv", "sweep_two.csv")),
            ("surface3d", ("mesh.npz", "gamma.json")),
            ("dyadic-heatmap", ("diag.csv",))):
        render(FigureRecipe(kind=kind,
                            inputs=tuple(artifact_dir / p for p in inputs),
                            output=str(tmp_path / (kind + ".png"))))
    assert {n: _sha(artifact_dir / n) for n in names} == before


# ------------------------------------------------------------ schema gates

def test_decay_rejects_sweep_table(artifact_dir, tmp_path):
    recipe = FigureRecipe(kind="decay",
                          inputs=(artifact_dir / "sweep_one.csv",),
                          output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaMismatch, match="missing column"):
        render(recipe)


def test_sweep_rejects_diagnostics_table(artifact_dir, tmp_path):
    recipe = FigureRecipe(kind="sweep", inputs=(artifact_dir / "diag.csv",),
                          output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaMismatch, match="missing column"):
        render(recipe)


def test_heatmap_rejects_decay_table(artifact_dir, tmp_path):
    recipe = FigureRecipe(kind="dyadic-heatmap",
                          inputs=(artifact_dir / "decay.csv",),
                          output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaMismatch, match="missing column"):
        render(recipe)


def test_heatmap_rejects_two_tables(artifact_dir, tmp_path):
    recipe = FigureRecipe(kind="dyadic-heatmap",
                          inputs=(artifact_dir / "diag.csv",
                                  artifact_dir / "diag.csv"),
                          output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaMismatch, match="exactly one"):
        render(recipe)


def test_surface3d_rejects_wrong_file_mix(artifact_dir, tmp_path):
    recipe = FigureRecipe(kind="surface3d",
                          inputs=(artifact_dir / "decay.csv",
                                  artifact_dir / "gamma.json"),
                          output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaMismatch, match="mesh container"):
        render(recipe)


def test_empty_table_rejected(artifact_dir, tmp_path):
    text = (artifact_dir / "decay.csv").read_text().splitlines()[:2]
    empty = tmp_path / "empty.csv"
    empty.write_text("\n".join(text) + "\n")
    recipe = FigureRecipe(kind="decay", inputs=(empty,),
                          output=str(tmp_path / "x.png"))
    with pytest.raises(SchemaMismatch, match="no data rows"):
        render(recipe)


# ----------------------------------------------------------------- recipes

def test_recipe_rejects_unknown_kind(artifact_dir):
    with pytest.raises(ValueError, match="unknown figure kind"):
        FigureRecipe(kind="pie", inputs=(artifact_dir / "decay.csv",),
                     output="x.png")


def test_recipe_rejects_empty_inputs():
    with pytest.raises(ValueError, match="at least one input"):
        FigureRecipe(kind="decay", inputs=(), output="x.png")


def test_recipe_rejects_unknown_format(artifact_dir):
    with pytest.raises(ValueError, match="png or .svg"):
        FigureRecipe(kind="decay", inputs=(artifact_dir / "decay.csv",),
                     output="x.pdf")


def test_recipe_from_json_resolves_relative_paths(artifact_dir, tmp_path):
    recipe_path = tmp_path / "recipe.json"
    recipe_path.write_text(json.dumps({
        "kind": "decay",
        "inputs": [str(artifact_dir / "decay.csv")],
        "output": "out/figure.png",
    }))
    recipe = FigureRecipe.from_json(recipe_path)
    assert recipe.output == str(tmp_path / "out" / "figure.png")
    assert recipe.inputs == (str(artifact_dir / "decay.csv"),)


def test_recipe_from_json_requires_keys(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text(json.dumps({"kind": "decay"}))
    with pytest.raises(ValueError, match="inputs, output"):
        FigureRecipe.from_json(path)


# ------------------------------------------------------------------ script

def _run_script(args, cwd):
    return subprocess.run(["latsurf-figures"] + [str(a) for a in args],
                          cwd=cwd, capture_output=True, text=True)


def test_script_renders_recipe(artifact_dir, tmp_path):
    recipe_path = tmp_path / "sweep.json"
    recipe_path.write_text(json.dumps({
        "kind": "sweep",
        "inputs": [str(artifact_dir / "sweep_one.csv"),
                   str(artifact_dir / "sweep_two.csv")],
        "output": "sweep.svg",
    }))
    proc = _run_script([recipe_path], tmp_path)
    assert proc.returncode == 0, proc.stderr
    assert "wrote" in proc.stdout
    assert (tmp_path / "sweep.svg").stat().st_size > 0


def test_script_exit_1_on_schema_mismatch(artifact_dir, tmp_path):
    recipe_path = tmp_path / "bad.json"
    recipe_path.write_text(json.dumps({
        "kind": "decay",
        "inputs": [str(artifact_dir / "sweep_one.csv")],
        "output": "bad.png",
    }))
    proc = _run_script([recipe_path], tmp_path)
    assert proc.returncode == 1
    assert "schema mismatch" in proc.stderr


def test_script_exit_2_on_bad_recipe(tmp_path):
    recipe_path = tmp_path / "incomplete.json"
    recipe_path.write_text(json.dumps({"kind": "decay"}))
    proc = _run_script([recipe_path], tmp_path)
    assert proc.returncode == 2
    assert "recipe error" in proc.stderr
