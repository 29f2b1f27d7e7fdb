import math

import numpy as np
import pytest

from box3d.camera import Box2D, CameraIntrinsics, Detection2D, Dimensions
from box3d.kitti_io import (
    ObjectLabel,
    PropertyRecord,
    coerce_fields,
    parse_calib,
    parse_detections,
    parse_keyvalue,
    parse_labels,
    parse_properties,
    write_calib,
    write_detections,
    write_labels,
    write_properties,
)
from box3d.properties import MultiBinOutput, RegressedProperties, default_bin_centers
from box3d.solver import SolverConfig
from box3d.synthetic import SyntheticSceneSpec, exact_box2d, generate_scene
from box3d.viewpoints import extremal_vertices

REAL_CALIB = (
    "P0: 7.215377000000e+02 0.000000000000e+00 6.095593000000e+02 0.000000000000e+00 "
    "0.000000000000e+00 7.215377000000e+02 1.728540000000e+02 0.000000000000e+00 "
    "0.000000000000e+00 0.000000000000e+00 1.000000000000e+00 0.000000000000e+00\n"
    "P2: 7.215377000000e+02 0.000000000000e+00 6.095593000000e+02 4.485728000000e+01 "
    "0.000000000000e+00 7.215377000000e+02 1.728540000000e+02 2.163791000000e-01 "
    "0.000000000000e+00 0.000000000000e+00 1.000000000000e+00 2.745884000000e-03\n"
)


# ---------------------------------------------------------------------------
# calibration


def test_parse_real_calib_line():
    k = parse_calib(REAL_CALIB)
    assert k.fu == pytest.approx(721.5377)
    assert k.fv == pytest.approx(721.5377)
    assert k.cu == pytest.approx(609.5593)
    assert k.cv == pytest.approx(172.854)


def test_parse_identity_like_calib():
    text = "P2: 1 0 0 0 0 1 0 0 0 0 1 0\n"
    k = parse_calib(text)
    assert (k.fu, k.fv, k.cu, k.cv) == (1.0, 1.0, 0.0, 0.0)


def test_parse_empty_calib_raises():
    with pytest.raises(ValueError):
        parse_calib("")


def test_parse_wrong_count_raises():
    with pytest.raises(ValueError):
        parse_calib("P2: 1 2 3\n")


def test_calib_round_trip():
    k = CameraIntrinsics(721.5377, 720.1, 609.5593, 172.854)
    back = parse_calib(write_calib(k))
    assert back == k


# ---------------------------------------------------------------------------
# labels


def _labels_fixture():
    return [
        ObjectLabel(
            "Car", 0.0, 0, -1.234567, Box2D(100.5, 120.25, 300.75, 250.0),
            Dimensions(1.52, 1.64, 3.86), np.array([2.5, 1.65, 22.125]), 0.654321, None,
        ),
        ObjectLabel(
            "Pedestrian", 0.1, 1, 0.5, Box2D(400.0, 150.0, 430.0, 230.0),
            Dimensions(1.8, 0.6, 0.8), np.array([-4.0, 1.6, 15.0]), -2.0, 0.91,
        ),
    ]


def test_label_round_trip_numeric_identity():
    objs = _labels_fixture()
    text = write_labels(objs)
    back = parse_labels(text).objects
    assert len(back) == 2
    for a, b in zip(objs, back):
        assert a.cls == b.cls
        assert b.alpha == pytest.approx(a.alpha, abs=1e-6)
        assert b.yaw == pytest.approx(a.yaw, abs=1e-6)
        assert np.allclose(b.location, a.location, atol=1e-6)
        assert (b.dims.h, b.dims.w, b.dims.l) == pytest.approx(
            (a.dims.h, a.dims.w, a.dims.l), abs=1e-6
        )
        assert (a.score is None) == (b.score is None)
    # a second trip is byte-identical
    assert write_labels(back) == text


def test_dontcare_row_parsed_and_flagged():
    text = "DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10\n"
    record = parse_labels(text)
    assert len(record.objects) == 1
    assert record.objects[0].is_dontcare


def test_score_column_optional():
    with_score = "Car 0 0 0.5 10 10 50 50 1.5 1.6 3.9 1 1.6 20 0.3 0.87\n"
    without = "Car 0 0 0.5 10 10 50 50 1.5 1.6 3.9 1 1.6 20 0.3\n"
    assert parse_labels(with_score).objects[0].score == pytest.approx(0.87)
    assert parse_labels(without).objects[0].score is None


def test_wrong_column_count_raises():
    with pytest.raises(ValueError):
        parse_labels("Car 1 2 3\n")


# ---------------------------------------------------------------------------
# detections


def test_detections_round_trip():
    dets = [
        Detection2D(Box2D(10.0, 20.0, 110.0, 90.0), 0.75, "Car"),
        Detection2D(Box2D(300.0, 100.0, 420.0, 200.0), 0.5, "Cyclist"),
    ]
    text = write_detections(dets)
    back = parse_detections(text)
    assert back == [
        Detection2D(Box2D(10.0, 20.0, 110.0, 90.0), 0.75, "Car"),
        Detection2D(Box2D(300.0, 100.0, 420.0, 200.0), 0.5, "Cyclist"),
    ]


def test_detection_wrong_columns_raise():
    with pytest.raises(ValueError):
        parse_detections("Car 1 2 3\n")


# ---------------------------------------------------------------------------
# regressed-property sidecar


def _property_fixture():
    centers = default_bin_centers(2)
    return PropertyRecord(
        "000001",
        [
            RegressedProperties(
                (0.05, -0.02, 0.3),
                MultiBinOutput((1.0, 0.0), (0.25, 0.0), (0.9682458, 1.0), centers),
                viewpoint_class=9,
                cbf_offset=(1.5, -0.75),
            ),
            RegressedProperties(
                (0.0, 0.0, 0.0),
                MultiBinOutput((0.2, 0.8), (0.0, -0.5), (1.0, 0.8660254), centers),
                viewpoint_class=3,
                cbf_offset=(0.0, 0.0),
            ),
        ],
    )


def test_properties_round_trip():
    record = _property_fixture()
    text = write_properties(record)
    back = parse_properties(text, record.frame_id)
    assert back.frame_id == record.frame_id
    assert len(back.properties) == 2
    for a, b in zip(record.properties, back.properties):
        assert b.viewpoint_class == a.viewpoint_class
        assert b.dim_residual == pytest.approx(a.dim_residual)
        assert b.cbf_offset == pytest.approx(a.cbf_offset)
        assert b.multibin.confidences == pytest.approx(a.multibin.confidences)
        assert b.multibin.sin_residuals == pytest.approx(a.multibin.sin_residuals)
        assert b.multibin.cos_residuals == pytest.approx(a.multibin.cos_residuals)


def test_properties_header_required():
    with pytest.raises(ValueError):
        parse_properties("1 2 3\n")


# ---------------------------------------------------------------------------
# key-value configs


def test_parse_keyvalue_basics():
    text = "a = 1.5\n# comment\nb = hello  # trailing\n\nc=2\n"
    assert parse_keyvalue(text) == {"a": "1.5", "b": "hello", "c": "2"}


def test_coerce_solver_config():
    cfg = coerce_fields(SolverConfig(), {"max_iterations": "7", "fd_step": "1e-4"})
    assert cfg.max_iterations == 7
    assert cfg.fd_step == pytest.approx(1e-4)


def test_coerce_unknown_key_raises():
    with pytest.raises(ValueError):
        coerce_fields(SolverConfig(), {"bogus": "1"})


def test_coerce_scene_spec_flags_and_ranges():
    spec = coerce_fields(
        SyntheticSceneSpec(),
        {"depth_min": "8", "allow_truncated": "true", "n_objects_max": "2"},
    )
    assert spec.depth_min == 8.0
    assert spec.allow_truncated is True
    assert spec.n_objects_max == 2


# ---------------------------------------------------------------------------
# synthetic generation


def test_generate_scene_deterministic_byte_identical():
    spec = SyntheticSceneSpec(n_objects_min=2, n_objects_max=4, seed=77, dims_sigma=0.05,
                              box_noise_sigma=1.0, cbf_noise_sigma=1.0, angle_noise_sigma=0.01)
    a_gt, a_det, a_props = generate_scene(spec)
    b_gt, b_det, b_props = generate_scene(spec)
    assert write_labels(a_gt.objects) == write_labels(b_gt.objects)
    assert write_detections(a_det) == write_detections(b_det)
    assert write_properties(a_props) == write_properties(b_props)


def test_generated_box_is_hull_of_projected_vertices():
    gt, _, _ = generate_scene(SyntheticSceneSpec(n_objects_min=3, n_objects_max=3, seed=5))
    from box3d.camera import box_vertices, project_point

    for obj in gt.objects:
        uv = np.stack([project_point(gt.camera, p) for p in box_vertices(obj.box3d())])
        assert obj.box2d.u_min == pytest.approx(uv[:, 0].min())
        assert obj.box2d.u_max == pytest.approx(uv[:, 0].max())
        assert obj.box2d.v_min == pytest.approx(uv[:, 1].min())
        assert obj.box2d.v_max == pytest.approx(uv[:, 1].max())
        # and the extremes are attained by the viewpoint-selected corners
        left, right, top, bottom = extremal_vertices(obj.box3d(), gt.camera)
        assert uv[left, 0] == obj.box2d.u_min
        assert uv[right, 0] == obj.box2d.u_max
        assert uv[top, 1] == obj.box2d.v_min
        assert uv[bottom, 1] == obj.box2d.v_max


def test_border_straddling_object_flagged_truncated():
    from box3d.solver import is_truncated

    spec = SyntheticSceneSpec(
        n_objects_min=1, n_objects_max=1, seed=3,
        lateral_min=-16.0, lateral_max=-13.0, depth_min=14.0, depth_max=18.0,
        allow_truncated=True, allow_boundary_poses=True,
    )
    gt, dets, _ = generate_scene(spec)
    box = gt.objects[0].box2d
    assert box.u_min == 0.0  # clamped at the left border
    assert is_truncated(box, (spec.image_width, spec.image_height))


def test_scene_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSceneSpec(n_objects_min=0)
    with pytest.raises(ValueError):
        SyntheticSceneSpec(depth_min=10.0, depth_max=5.0)
    with pytest.raises(ValueError):
        SyntheticSceneSpec(box_noise_sigma=-1.0)
