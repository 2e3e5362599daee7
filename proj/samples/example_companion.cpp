// Sub-Gramians, pair sub-Gramians and inverse parts of a companion system.
#include "gramspec/gramspec.hpp"

#include <iostream>

int main() {
    using namespace gramspec;
    const Polynomial p({-6.0, 11.0, -6.0, 1.0});
    const auto cr = build_companion(p);
    const auto spec = spectrum_of(p);

    const auto sub = infinite_subgramians(cr, spec);
    for (const auto& c : sub.components) {
        std::cout << "P_" << c.index.i + 1 << " =\n" << c.value.real() << "\n\n";
    }
    std::cout << "P = sum =\n" << sub.sum().real() << "\n\n";

    const auto inv = inverse_eigenparts(cr, spec);
    std::cout << "P^-1 = sum of inverse parts =\n" << inv.sum().real() << "\n";
}
