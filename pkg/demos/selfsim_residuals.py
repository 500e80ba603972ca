"""Self-similar shrinkers among rotationally symmetric convex bodies.

A hypersurface shrinks self-similarly under X_t = -F nu exactly when
F + C = <X, nu> pointwise.  For C <= 0 the sphere of radius r* (the unique
root of F(1/r,...,1/r) + C = r) is a solution; the uniqueness theory says it
is the only closed convex one.  This script evaluates the equation's grid
residual on spheres, ellipsoids and perturbed spheres, and checks the two
closed-form structure identities that hold on the stationary sphere.

Run:  python3 demos/selfsim_residuals.py
"""

from flowlab import (
    Ellipsoid,
    PerturbedSphere,
    SpeedFunction,
    Sphere,
    make_shape,
    selfsim_residual,
    sphere_identity_residuals,
    stationary_sphere_radius,
)

N = 200

print("stationary radii and sphere residuals (C = 0)")
print(f"{'F':16s} {'n':>2s} {'r*':>16s} {'max residual':>13s}")
for expr, n in [("sigma(1)", 2), ("sigma(2)", 2), ("sigma(2)^(1/2)", 3),
                ("sigma(3)^(1/3)", 4), ("S(2)^(1/2)", 3), ("sigma(2)^2", 5)]:
    F = SpeedFunction.parse(expr)
    r = stationary_sphere_radius(F, 0.0, n)
    p = make_shape(Sphere(r), n=n, N=N)
    mx, _ = selfsim_residual(p, F, 0.0)
    print(f"{expr:16s} {n:2d} {r:16.12f} {mx:13.3e}")

print("\nnon-spheres are not self-similar (F = sigma(1), n = 2, C = 0)")
for shape in (Ellipsoid(1.2, 1.0), Ellipsoid(1.5, 1.0),
              PerturbedSphere(1.4, 4, 0.01)):
    p = make_shape(shape, n=2, N=N)
    mx, mean = selfsim_residual(p, SpeedFunction.parse("sigma(1)"), 0.0)
    print(f"  {shape!r}: max |residual| = {mx:.3e}, mean = {mean:.3e}")

print("\nstructure identities on the stationary sphere (both must vanish)")
for expr, n, C in [("sigma(2)^(1/2)", 3, 0.0), ("sigma(2)^(1/2)", 3, -1.0),
                   ("sigma(3)", 3, -0.5)]:
    F = SpeedFunction.parse(expr)
    res1, res5 = sphere_identity_residuals(F, C, n)
    print(f"  F = {expr}, n = {n}, C = {C}: res1 = {res1:.2e}, "
          f"res5 = {res5:.2e}")
