"""
qcnnlab
容错量子卷积神经网络 (QCNN) 对称保护拓扑相识别的经典模拟实验室
"""

__version__ = "0.1.0"
