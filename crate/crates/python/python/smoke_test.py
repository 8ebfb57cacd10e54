"""Quick end-to-end check of the compiled extension.

Build and install it first, e.g. `maturin develop -m crates/python/Cargo.toml`.
"""

import kspectra


def main():
    assert kspectra.fwht([1.0, 0.0, 0.0, 0.0]) == [1.0, 1.0, 1.0, 1.0]
    assert kspectra.parity_eval(0b101, [1, -1, -1]) == -1
    assert kspectra.enumerate_low_degree(3, 1) == [0, 1, 2, 4]
    assert kspectra.project_l1([2.0, 1.0], 1.0) == [1.0, 0.0]

    points, labels, truth = kspectra.generate_planted(12, 3, 2, 1500, 4)
    assert len(points) == 1500 and len(truth) == 3
    assert truth.predict(points) == labels

    masks = kspectra.select_features(points, labels, 2, 25)
    assert len(masks) == 25
    recovered = sum(1 for bits, _ in truth.terms if bits in masks)

    model = kspectra.fit(points, labels, d=2, k=25)
    train_error = kspectra.empirical_risk(model.predict(points), labels)
    assert train_error < 0.05, train_error
    assert kspectra.SparseClassifier.from_text(model.to_text()).terms == model.terms

    term = kspectra.vc_bound_term(150.0, 3000, 0.05)
    assert 0.0 < term < 1.0
    assert kspectra.verify_shattering_construction(3)

    try:
        kspectra.fwht([1.0, 2.0, 3.0])
    except ValueError:
        pass
    else:
        raise AssertionError("non power-of-two length accepted")

    print(f"ok: recovered {recovered}/3 planted masks, train error {train_error:.4f}, "
          f"bound term {term:.4f}, {model!r}")


if __name__ == "__main__":
    main()
