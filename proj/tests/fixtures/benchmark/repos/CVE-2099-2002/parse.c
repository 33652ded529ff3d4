/* Header parser for a toy HTTP server. */
#include <ctype.h>
#include <string.h>

typedef struct {
    const char *name;
    const char *value;
} header_t;

static const char *methods[] = {"GET", "POST", "PUT", NULL};

typedef int (*handler_fn)(const header_t *h);

int parse_method(const char *line)
{
    for (int i = 0; methods[i]; i++) {
        if (strncmp(line, methods[i], strlen(methods[i])) == 0)
            return i;
    }
    return -1;
}

static int header_cmp(const header_t *a, const header_t *b);

int parse_header(char *line, header_t *out)
{
    char *colon = strchr(line, ':');
    if (!colon)
        return -1;
    *colon = '\0';
    out->name = line;
    while (isspace((unsigned char)*++colon)) {
    }
    out->value = colon;
    return 0;
}

static int header_cmp(const header_t *a, const header_t *b)
{
    return strcmp(a->name, b->name);
}

#ifdef WITH_TRACE
void trace_header(const header_t *h)
{
    (void)h;
}
#endif

int (*pick_handler(int method))(const header_t *)
{
    (void)method;
    return 0;
}
