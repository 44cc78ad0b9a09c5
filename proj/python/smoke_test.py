"""Smoke tests for the scgpy bindings; exits nonzero on any failure."""

import json
import math
import sys

import scgpy


def test_tls_policy():
    policy = json.loads(scgpy.default_policy())
    assert policy["min_version"] == "TLS1.2"
    assert len(policy["allowed_suites"]) == 4

    good = {
        "protocol_version": "TLS1_2",
        "cipher_suite": "TLS_ECDHE_RSA_WITH_AES_128_GCM_SHA256",
        "client_certificate_presented": True,
        "ecdh_curve_bits": 256,
    }
    decision = json.loads(scgpy.evaluate_handshake(json.dumps(good)))
    assert decision["accepted"], decision

    bad = dict(good, protocol_version="TLS1_0")
    decision = json.loads(scgpy.evaluate_handshake(json.dumps(bad)))
    assert not decision["accepted"]
    assert any(v.startswith("V01") for v in decision["violations"])

    report = json.loads(scgpy.audit_profiles(json.dumps([good, bad])))
    assert report["accepted"] == 1 and report["rejected"] == 1

    assert len(scgpy.suite_registry_snapshot()) >= 100


def test_privacy():
    assert math.isclose(scgpy.emd_equal_distance([1, 0], [0.5, 0.5]), 0.5)
    assert math.isclose(scgpy.emd_ordered([1, 0, 0], [1 / 3, 1 / 3, 1 / 3]), 0.5)

    key = "00" * 16
    p1 = scgpy.pseudonymize("meter-17", key, "device")
    assert p1 == scgpy.pseudonymize("meter-17", key, "device")
    assert p1 != scgpy.pseudonymize("meter-17", key, "household")
    assert scgpy.looks_like_pseudonym(p1)
    assert not scgpy.looks_like_pseudonym("meter-17")

    try:
        scgpy.pseudonymize("x", "00" * 15, "device")
    except scgpy.ScgError:
        pass
    else:
        raise AssertionError("short key accepted")


def test_alerting():
    assert scgpy.classify_severity(0) == scgpy.classify_severity(1)
    assert scgpy.classify_severity(0) != scgpy.classify_severity(7)
    try:
        scgpy.classify_severity(9)
    except scgpy.ScgError:
        pass
    else:
        raise AssertionError("severity 9 accepted")


def test_framing():
    msg = {
        "id": "7c9e6679-7425-40de-944b-e07fc1f90ae7",
        "kind": "measurement",
        "device": "meter-17",
        "ts": "2017-03-20T12:00:00Z",
        "proto_version": 1,
        "body": {"kWh": 3},
    }
    frame = scgpy.encode_frame(json.dumps(msg))
    assert frame[:4] == (len(frame) - 4).to_bytes(4, "big")
    decoded_json, consumed = scgpy.decode_frame(frame + b"extra")
    assert consumed == len(frame)
    assert json.loads(decoded_json) == msg
    assert scgpy.canonical_encode(json.dumps(msg)) == decoded_json


def test_sim():
    assert math.isclose(
        scgpy.uptime([(0.0, 2400.0)], 30 * 24 * 3600.0), 0.999074, abs_tol=1e-6
    )
    scenario = {"seed": 7, "devices": 2, "rate_per_device_hz": 2.0, "duration_s": 5.0}
    report = json.loads(scgpy.run_scenario(json.dumps(scenario)))
    assert report["lost"] == 0
    assert report["delivered_unique"] == report["sent"] > 0
    assert report["pass"] is True


def main():
    tests = [test_tls_policy, test_privacy, test_alerting, test_framing, test_sim]
    for test in tests:
        test()
        print(f"ok {test.__name__}")
    print(f"{len(tests)} smoke tests passed")


if __name__ == "__main__":
    sys.exit(main())
