#pragma once

namespace wbe::dist {

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double dof);

/// Two-sided p-value for a t statistic.
double student_t_two_sided_p(double t, double dof);

/// Inverse of student_t_cdf; p in (0, 1).
double student_t_quantile(double p, double dof);

double normal_cdf(double z);
double normal_quantile(double p);

}  // namespace wbe::dist
