"""Walk through the pieces on the six-point rotation and its height-3 tower."""
from pimsner_lab.correspondence import TensorPowerCache
from pimsner_lab.factorization import (certify_cpc_order_zero, incoming_map_sample, row_gram_check,
                                       verify_factorization)
from pimsner_lab.fixtures import build_band, c6_fixture, cyclic_fixture, twisted_free_cyclic
from pimsner_lab.fock import quasicentral_check
from pimsner_lab.rokhlin import bump_coefficients, check_tower


def main() -> None:
    H, t = c6_fixture()
    print("tower defects:", check_tower(t, H).as_dict())

    r = row_gram_check(t.roots(0), H)
    print(f"row operator: delta={r.delta:g} dev1={r.dev1:.1e} dev2={r.dev2:.1e} over {r.tested} test elements")

    cache = TensorPowerCache(H)
    c = certify_cpc_order_zero(incoming_map_sample(t.roots(0), cache))
    print(f"incoming map: choi min {c.choi_min_eigenvalue:.1e}, norm {c.norm_estimate:.4f}, "
          f"orthogonal pairs {c.order_zero_max:.1e}")

    print("bump sums d(k) + d(h+k mod p) for p=9:", bump_coefficients(9, 0).round(4).tolist())

    H33, t33 = cyclic_fixture(33)
    c33 = TensorPowerCache(H33)
    cert = verify_factorization(c33, t33, [build_band(c33, {"x": [0]}), build_band(c33, {})], 0.7, 40,
                                labels=["T_z", "unit"])
    for e in cert.elements:
        print(f"factorization {e.label}: measured {e.measured:.4f} (bound {cert.analytic_bound:.3f})")

    tw = twisted_free_cyclic(2, [0, 1])
    for n in range(3):
        print(f"unit projection q_{n}: commutator defect {quasicentral_check(tw, 3, n).defect:.2e}")


if __name__ == "__main__":
    main()
