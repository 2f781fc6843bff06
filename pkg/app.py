"""
qcnnlab 应用入口模块
确保输出目录存在后转交命令行
"""
import os
import sys

from qcnnlab.api.cli import main as cli_main
from qcnnlab.config import config
from qcnnlab.utils.logging_utils import logger


def main(argv=None):
    """
    应用入口函数

    Args:
        argv: 命令行参数，默认取 sys.argv[1:]

    Returns:
        int: 退出码
    """
    os.makedirs(config.get('results_dir'), exist_ok=True)
    logger.debug(f"使用配置: {config.as_dict}")
    return cli_main(argv)


if __name__ == '__main__':
    sys.exit(main())
