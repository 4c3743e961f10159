//! Trigonometric and exponential identities, as pairs of QGL expressions.

pub const IDENTITIES: &[(&str, &str, &str)] = &[
    ("pythagorean", "sin(x)^2 + cos(x)^2", "1"),
    ("pythagorean-products", "cos(x)*cos(x) + sin(x)*sin(x)", "1"),
    ("sin-sum", "sin(x + y)", "sin(x)*cos(y) + cos(x)*sin(y)"),
    ("cos-sum", "cos(x + y)", "cos(x)*cos(y) - sin(x)*sin(y)"),
    ("sin-diff", "sin(x - y)", "sin(x)*cos(y) - cos(x)*sin(y)"),
    ("cos-diff", "cos(x - y)", "cos(x)*cos(y) + sin(x)*sin(y)"),
    ("sin-double", "sin(2*x)", "2*sin(x)*cos(x)"),
    ("cos-double-squares", "cos(2*x)", "cos(x)^2 - sin(x)^2"),
    ("cos-double-cos", "cos(2*x)", "2*cos(x)^2 - 1"),
    ("cos-double-sin", "cos(2*x)", "1 - 2*sin(x)^2"),
    ("cos-half", "cos(x/2)^2", "(1 + cos(x))/2"),
    ("sin-half", "sin(x/2)^2", "(1 - cos(x))/2"),
    ("product-sin-cos", "2*sin(x)*cos(y)", "sin(x + y) + sin(x - y)"),
    ("product-cos-cos", "2*cos(x)*cos(y)", "cos(x - y) + cos(x + y)"),
    ("product-sin-sin", "2*sin(x)*sin(y)", "cos(x - y) - cos(x + y)"),
    ("euler", "e^(i*x)", "cos(x) + i*sin(x)"),
    ("euler-product", "e^(i*x)*e^(i*y)", "e^(i*(x + y))"),
    ("euler-square", "(e^(i*x))^2", "e^(2*i*x)"),
    ("euler-conjugate-product", "e^(i*x)*e^(~i*x)", "1"),
    ("euler-inverse", "1/e^(i*x)", "e^(~i*x)"),
    ("euler-cos", "(e^(i*x) + e^(~i*x))/2", "cos(x)"),
    ("euler-sin", "(e^(i*x) - e^(~i*x))/(2*i)", "sin(x)"),
    ("sin-parity", "sin(~x)", "~sin(x)"),
    ("cos-parity", "cos(~x)", "cos(x)"),
    ("sin-quarter-shift", "sin(x + π/2)", "cos(x)"),
    ("cos-quarter-shift", "cos(x + π/2)", "~sin(x)"),
    ("sin-half-shift", "sin(x + π)", "~sin(x)"),
    ("cos-half-shift", "cos(x + π)", "~cos(x)"),
    ("sin-reflection", "sin(π - x)", "sin(x)"),
    ("cos-complement", "cos(π/2 - x)", "sin(x)"),
    ("exp-sum", "exp(x + y)", "exp(x)*exp(y)"),
];
