#include "hre/fixtures.hpp"

#include <cmath>

#include "hre/errors.hpp"
#include "hre/rng.hpp"

namespace hre {

// Coefficients and dispersions are the HRE column of the applied example;
// the errors come from the efficient law, i.e. data drawn from the fitted
// model itself.
ShapedFixture cakes_shape() {
    ShapedFixture f;
    f.name = "cakes";
    f.covariate_name = "temperature";
    f.K = 15;
    f.x_values = {175, 185, 195, 205, 215, 225};
    f.beta = {2.251, 0.006};
    f.sigma2 = 0.003;
    f.seed = 1;
    return f;
}

ShapedFixture sleepstudy_shape() {
    ShapedFixture f;
    f.name = "sleepstudy";
    f.covariate_name = "days";
    f.K = 18;
    f.x_values = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    f.beta = {5.532, 0.033};
    f.sigma2 = 0.012;
    f.seed = 2;
    return f;
}

ShapedFixture shape_by_name(const std::string& name) {
    if (name == "cakes") return cakes_shape();
    if (name == "sleepstudy") return sleepstudy_shape();
    throw DomainError("unknown fixture shape '" + name + "' (expected cakes or sleepstudy)");
}

PanelDataset generate_shaped(const ShapedFixture& fixture) {
    if (fixture.K < 1 || fixture.x_values.empty() || fixture.beta.size() != 2)
        throw DomainError("generate_shaped: need K >= 1, some x values and two coefficients");
    const std::size_t n = fixture.x_values.size();
    const double sigma = std::sqrt(fixture.sigma2);
    std::vector<Group> groups;
    for (int i = 0; i < fixture.K; ++i) {
        RngStream stream(fixture.seed, static_cast<std::uint64_t>(i));
        Group g;
        g.id = std::to_string(i + 1);
        g.design = DenseMatrix(n, 2);
        const double nu = sigma * rng_normal(stream);
        for (std::size_t j = 0; j < n; ++j) {
            g.design(j, 0) = 1.0;
            g.design(j, 1) = fixture.x_values[j];
            const double eta = fixture.beta[0] + fixture.beta[1] * fixture.x_values[j] + nu;
            g.responses.push_back(std::exp(eta) * sample_error(fixture.error_law, stream));
        }
        groups.push_back(std::move(g));
    }
    return PanelDataset(std::move(groups));
}

}  // namespace hre
