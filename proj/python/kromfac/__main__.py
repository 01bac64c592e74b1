import sys

from ._core import run_command


def main() -> int:
    code, out, err = run_command(sys.argv[1:])
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
