"""Experiment drivers for the sign-kinematics toolkit."""
