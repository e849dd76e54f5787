"""Package marker so these modules never collide with the detector suite."""
