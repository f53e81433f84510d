"""Tour of the three structured triangulations.

Builds each kind on the unit square, prints its bookkeeping, and runs a
plain Euclidean angle census so the naming (45/90/135 degrees of the
characteristic corner) is visible in numbers.  Pass a directory argument
to also export the meshes in the plain-text format `import_mesh` reads.
"""

import sys

import numpy as np

from wgdmp.mesh import STRUCTURED_KINDS, export_mesh, generate_structured


def angle_census(mesh):
    """Histogram of corner angles in degrees, rounded to the nearest 5."""
    p = mesh.vertices[mesh.triangles]
    census = {}
    for t in range(mesh.n_elements):
        for l in range(3):
            a = p[t, l] - p[t, (l + 2) % 3]
            b = p[t, (l + 1) % 3] - p[t, l]
            cosv = -(a @ b) / (np.hypot(*a) * np.hypot(*b))
            deg = 5 * round(np.degrees(np.arccos(np.clip(cosv, -1, 1))) / 5)
            census[deg] = census.get(deg, 0) + 1
    return dict(sorted(census.items()))


def main(out_dir=None):
    n = 4
    for kind in STRUCTURED_KINDS:
        mesh = generate_structured(kind, n, n)
        euler = mesh.n_vertices - mesh.n_edges + mesh.n_elements
        print(f"{kind}  ({n}x{n} cells)")
        print(f"  vertices {mesh.n_vertices}, edges {mesh.n_edges} "
              f"({mesh.n_interior_edges} interior, "
              f"{mesh.n_boundary_edges} boundary), "
              f"triangles {mesh.n_elements}, euler {euler}")
        print(f"  corner angles (deg: count): {angle_census(mesh)}")
        if out_dir is not None:
            path = f"{out_dir}/{kind}_{n}x{n}.mesh"
            export_mesh(mesh, path)
            print(f"  wrote {path}")
        print()
    print("mesh45 and mesh135 differ only by the diagonal direction; the")
    print("criss-cross mesh90 has four right triangles per cell.  Which of")
    print("them keeps the maximum principle depends on the diffusion tensor,")
    print("not on these Euclidean angles -- see anisotropy_bounds.py.")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
