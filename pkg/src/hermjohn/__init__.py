"""Maximal-volume hermitian ellipsoids inscribed in pseudoconvex domains."""
from .certificate import (CertificateReport, ContactMeasure, certificate_report,
                          centered_residual, check_trace_identity, fit_measure, prune_support,
                          translate_residuals)
from .containment import (ContactSet, ContainmentConfig, contact_points, fit_scale, inscribed,
                          max_rho_on_ellipsoid, scan)
from .domains import (DomainSpec, Polynomial, ball, cassini, domain_from_json, hyperbola_box,
                      levi_form, planar_union, polydisc, psh_sample_check, sublevel,
                      wirtinger_grad)
from .harness import ConvexityReport, UniquenessReport, convexity_probe, uniqueness_probe
from .hermitian import (Ellipsoid, HPDForm, ValidationError, frac_power, geodesic_point,
                        log_volume, transport_operator, volume)
from .solver import (CENTERED, TRANSLATE, PreconditionError, SolveConfig, SolveReport,
                     direction_lp, solve)

__version__ = "0.1.0"
