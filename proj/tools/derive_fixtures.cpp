// Regenerates fixtures/*.json from their seeded searches and constructions.

#include "pdmpcert/fixtures.hpp"

#include <filesystem>
#include <iostream>

using namespace pdmpcert;

int main(int argc, char** argv) {
    const std::filesystem::path dir = argc > 1 ? argv[1] : "fixtures";
    try {
        auto lv = derive_lv_fixture(kLVFixtureSeed);
        if (!lv) {
            std::cerr << "no Lotka-Volterra fixture found for seed " << kLVFixtureSeed << '\n';
            return 1;
        }
        auto sis = sis_lemma_search(kSISFixtureSeed);
        if (!sis) {
            std::cerr << "no SIS fixture found for seed " << kSISFixtureSeed << '\n';
            return 1;
        }
        write_file_atomic(dir / "annulus.json", json_text(annulus_fixture_document()));
        write_file_atomic(dir / "torus.json", json_text(torus_fixture_document()));
        write_file_atomic(dir / "torus_sin2.json", json_text(torus_sin2_fixture_document()));
        write_file_atomic(dir / "lv.json", json_text(lv_fixture_document(*lv)));
        write_file_atomic(dir / "sis_lemma.json", json_text(sis_lemma_fixture_document(*sis, kSISFixtureSeed)));
        write_file_atomic(dir / "sis_coinciding.json", json_text(coinciding_fixture_document()));
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    std::cout << "fixtures written to " << dir << '\n';
    return 0;
}
