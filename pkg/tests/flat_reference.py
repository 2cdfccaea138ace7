"""Dense-matrix transcription of the offset-point tracking law, written
independently of clbench so the two can be checked against each other."""
import numpy as np


def flat_control_dense(x, y, th, nu, om, lam, lam_dot, d_star, dd_star, cp, cd, cl, ddd_star=None):
    e1 = np.array([1.0, 0.0])
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    R_lam = R @ np.diag([1.0, lam])
    R_lam_inv = np.linalg.inv(R_lam)
    w_hat = np.array([[0.0, -lam * om], [om / lam, lam_dot / lam]])
    V = np.array([nu, om])
    d = np.array([x, y])
    u = (cp * R_lam_inv @ (np.asarray(d_star) - d - lam * R @ e1)
         + cd * (R_lam_inv @ np.asarray(dd_star) - V)
         - cd * lam_dot * e1
         - w_hat @ V
         - (w_hat - cl * np.eye(2)) @ (lam_dot * e1))
    if ddd_star is not None:
        u = u + R_lam_inv @ np.asarray(ddd_star)
    return u
