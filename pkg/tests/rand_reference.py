"""Reference estimates for the RAND HIE extract: (estimate, standard error) per term."""

TERMS = ("intercept", "age", "disea", "physlm", "logc", "idp", "lpi", "fmde",
         "linc", "lfam", "female", "black", "educdec", "hlthg")

_ROWS = [
    # tobit               tweedie          binomial          gamma
    (-212.276, 118.391, 4.253, 0.543, -0.732, 0.405, 4.972, 0.522),
    (2.274, 1.135, 0.007, 0.005, 0.015, 0.005, 0.004, 0.005),
    (6.319, 1.695, 0.015, 0.008, 0.044, 0.008, 0.008, 0.007),
    (214.712, 34.484, 0.688, 0.150, 0.321, 0.156, 0.664, 0.145),
    (-23.994, 17.530, -0.046, 0.079, -0.184, 0.065, -0.016, 0.076),
    (-7.057, 34.130, 0.051, 0.155, -0.061, 0.130, 0.057, 0.149),
    (-1.806, 5.612, -0.028, 0.025, 0.005, 0.022, -0.028, 0.024),
    (1.728, 10.453, 0.018, 0.047, 0.007, 0.039, 0.018, 0.045),
    (18.113, 11.951, 0.066, 0.055, 0.096, 0.038, 0.032, 0.055),
    (-12.640, 23.245, -0.013, 0.106, 0.054, 0.088, -0.008, 0.101),
    (138.240, 26.417, 0.397, 0.120, 0.904, 0.104, 0.270, 0.112),
    (-166.908, 39.181, -0.348, 0.179, -1.040, 0.128, -0.112, 0.174),
    (0.150, 4.556, -0.011, 0.021, 0.044, 0.018, -0.017, 0.019),
    (-17.324, 25.583, -0.067, 0.116, 0.102, 0.100, -0.082, 0.108),
]

COEFFICIENTS = {
    model: {t: (row[2 * j], row[2 * j + 1]) for t, row in zip(TERMS, _ROWS)}
    for j, model in enumerate(("tobit", "tweedie", "binomial", "gamma"))
}

LOGLIK = {"tobit": -21809.21, "tweedie": -18874.42, "binomial": -1371.20, "gamma": -17225.84}
POWER = 1.719
DISPERSION = {"tweedie": 9.518, "gamma": 7.629}
SUMMARY = {"n": 3301, "zero_fraction": 0.181, "mean": 206.80, "max": 17730.0}
TEST_RMSE = {"tweedie": 467.67, "twopart": 467.71, "tobit": 471.58}
