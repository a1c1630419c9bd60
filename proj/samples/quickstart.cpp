#include <cmath>
#include <cstdio>
#include <numbers>

#include "ncqsm/ncqsm.hpp"

using namespace ncqsm;

int main()
{
    // Bost-Connes Gibbs state of e(1/2) at beta = 2, two ways
    const BCRepresentation rep(1'000'000);
    const auto polylog = gibbs_state(BCMonomial::e(QZ(1, 2)), 2.0, rep);
    const auto mobius = gibbs_state_mobius_form(QZ(1, 2), 2.0, rep);
    std::printf("phi_2(e(1/2)) = %.9f (+- %.1e), mobius path %.9f\n", polylog.real(), polylog.tail_bound,
                mobius.real());

    // KMS condition for (mu_3, e(1/3) mu_3^*)
    const BCMonomial b{GroupRingElement::e(QZ(1, 3)), 1, 3};
    std::printf("KMS residual at beta = 2: %.2e\n", kms_residual(BCMonomial::mu(3), b, 2.0, rep).residual);

    // Witten index of the Riemann gas
    const FermionicBasis gas(1'000'000);
    std::printf("Witten index at beta = 2: %.9f, 6/pi^2 = %.9f\n", witten_index(2.0, gas).real(),
                6.0 / (std::numbers::pi * std::numbers::pi));

    // Dirac zeta of the Cantor triple for g = 2
    const auto z = dirac_zeta(2, 1.0, 40);
    std::printf("zeta_D(1) = %.12f, closed form %.12f\n", z.real(), dirac_zeta_closed_form(2, 1.0).real());

    // Patterson-Sullivan KMS scan on the boundary
    const auto a = CrossedMonomial::group(parse_word("a", 2), 2);
    const auto scan = ps_kms_scan(a, adjoint(a));
    for (std::size_t i = 0; i < scan.betas.size(); i += 5)
        std::printf("beta = %.4f  KMS residual %.3e\n", scan.betas[i], scan.residuals[i]);

    // Spectral action growth for the Cantor triple
    const auto fit = asymptotic_slope(cantor_model(2, 24), TestFunction::gaussian(), geometric_grid(1e2, 1e5, 41));
    std::printf("Tr exp(-(D/L)^2) ~ L^%.4f (expected %.4f), R^2 = %.6f\n", fit.slope, fit.expected_exponent, fit.r2);
}
